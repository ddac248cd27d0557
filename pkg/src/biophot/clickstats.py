"""Two-detector estimators: waiting times, windowed counting statistics,
normalized pair correlations, coincidence accounting, and decay-curve fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .clicks import ClickStream

__all__ = [
    "WaitingTimeReport",
    "CountingStats",
    "G2Curve",
    "CoincidenceReport",
    "DecayModelFit",
    "DecayFitReport",
    "waiting_times",
    "counting_stats",
    "g2",
    "symmetric_lags",
    "coincidences",
    "fit_decay",
    "ks_critical",
]

MIN_WAITING_EVENTS = 100
MIN_G2_EVENTS = 10_000
MIN_COUNT_WINDOWS = 50


# ---------------------------------------------------------------------------
# waiting times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaitingTimeReport:
    detector_id: int
    n_gaps: int
    rate_estimate: float          # maximum-likelihood exponential rate
    ks_distance: float
    ks_critical_1pct: float
    ks_critical_5pct: float
    exponential_at_1pct: bool
    hist_edges: np.ndarray
    hist_counts: np.ndarray


def ks_critical(n: int, alpha: float) -> float:
    """Asymptotic one-sample Kolmogorov-Smirnov critical distance."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def waiting_times(stream: ClickStream, detector_id: int, bins: int = 64) -> WaitingTimeReport:
    """Inter-arrival histogram with an exponential fit and its KS distance."""
    times = stream.detector_times(detector_id)
    if times.size < MIN_WAITING_EVENTS + 1:
        raise ValueError(
            f"need at least {MIN_WAITING_EVENTS} gaps on detector {detector_id}, "
            f"got {max(0, times.size - 1)}"
        )
    gaps = np.diff(times)
    n = gaps.size
    rate = (n - 1) / float(gaps.sum())
    ordered = np.sort(gaps)
    cdf = 1.0 - np.exp(-rate * ordered)
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    distance = float(max(upper, lower))
    crit1 = ks_critical(n, 0.01)
    crit5 = ks_critical(n, 0.05)
    counts, edges = np.histogram(gaps, bins=bins)
    return WaitingTimeReport(
        detector_id=detector_id,
        n_gaps=n,
        rate_estimate=float(rate),
        ks_distance=distance,
        ks_critical_1pct=crit1,
        ks_critical_5pct=crit5,
        exponential_at_1pct=bool(distance < crit1),
        hist_edges=edges,
        hist_counts=counts,
    )


# ---------------------------------------------------------------------------
# windowed counting statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountingStats:
    window: float
    n_windows: int
    mean: float
    variance: float
    fano: float
    mandel_q: float
    q_stderr: float
    chi2_pvalue: float
    count_values: np.ndarray      # distinct window counts, ascending
    count_freqs: np.ndarray       # number of windows showing each count


def _window_count_histogram(times: np.ndarray, window: float, n_windows: int):
    idx = np.floor(times / window).astype(np.int64)
    idx = idx[idx < n_windows]
    occupied, per_window = np.unique(idx, return_counts=True)
    values, freqs = np.unique(per_window, return_counts=True)
    zeros = n_windows - occupied.size
    if zeros > 0:
        values = np.concatenate([[0], values])
        freqs = np.concatenate([[zeros], freqs])
    return values.astype(np.int64), freqs.astype(np.int64)


def _poisson_chi2_pvalue(values, freqs, mean: float, n_windows: int) -> float:
    kmax = int(values.max())
    observed = np.zeros(kmax + 2)
    for v, f in zip(values, freqs):
        observed[v] = f
    pmf = stats.poisson.pmf(np.arange(kmax + 1), mean)
    expected = np.append(pmf, max(0.0, 1.0 - pmf.sum())) * n_windows
    # pool adjacent cells until every expected count reaches 5
    pooled_obs, pooled_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and pooled_exp:
        pooled_obs[-1] += acc_o
        pooled_exp[-1] += acc_e
    if len(pooled_exp) < 2:
        return 1.0
    chi2 = float(np.sum((np.array(pooled_obs) - pooled_exp) ** 2 / pooled_exp))
    dof = len(pooled_exp) - 2  # one constraint from totals, one fitted mean
    if dof < 1:
        return 1.0
    return float(stats.chi2.sf(chi2, dof))


def counting_stats(
    stream: ClickStream, window: float, detector_id: int | None = None
) -> CountingStats:
    """Counts per fixed window: mean, variance, Fano, Mandel Q, Poisson test.

    `detector_id=None` pools the events of all detectors.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    n_windows = int(stream.duration / window)
    if n_windows < MIN_COUNT_WINDOWS:
        raise ValueError(
            f"window {window:g}s gives {n_windows} bins; need >= {MIN_COUNT_WINDOWS}"
        )
    times = stream.times if detector_id is None else stream.detector_times(detector_id)
    values, freqs = _window_count_histogram(times, window, n_windows)
    n = n_windows
    mean = float(np.sum(values * freqs) / n)
    if mean == 0.0:
        raise ValueError("no events fall into the counting windows")
    centered = values - mean
    m2 = float(np.sum(freqs * centered**2) / n)
    m3 = float(np.sum(freqs * centered**3) / n)
    m4 = float(np.sum(freqs * centered**4) / n)
    variance = m2 * n / (n - 1)
    fano = variance / mean
    # delta-method variance of the Fano estimator from sample moments
    var_s2 = (m4 - m2**2 * (n - 3) / (n - 1)) / n
    var_mean = m2 / n
    cov = m3 / n
    rel = var_s2 / max(variance, 1e-300) ** 2 + var_mean / mean**2
    rel -= 2.0 * cov / (mean * max(variance, 1e-300))
    q_stderr = abs(fano) * math.sqrt(max(rel, 0.0))
    pvalue = _poisson_chi2_pvalue(values, freqs, mean, n)
    return CountingStats(
        window=window,
        n_windows=n,
        mean=mean,
        variance=variance,
        fano=fano,
        mandel_q=fano - 1.0,
        q_stderr=q_stderr,
        chi2_pvalue=pvalue,
        count_values=values,
        count_freqs=freqs,
    )


# ---------------------------------------------------------------------------
# pair correlation g2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class G2Curve:
    lags: np.ndarray              # bin centers, symmetric around 0 (seconds)
    g2: np.ndarray
    stderr: np.ndarray
    bin_width: float

    def __post_init__(self):
        if np.any(np.asarray(self.g2) < 0):
            raise ValueError("g2 values cannot be negative")

    def at_zero(self) -> tuple[float, float]:
        idx = int(np.argmin(np.abs(self.lags)))
        return float(self.g2[idx]), float(self.stderr[idx])


def symmetric_lags(max_lag: float, bin_width: float) -> np.ndarray:
    k = int(math.floor(max_lag / bin_width))
    return np.arange(-k, k + 1) * bin_width


def g2(
    stream: ClickStream,
    lags: np.ndarray | None = None,
    bin_width: float | None = None,
    max_lag: float | None = None,
) -> G2Curve:
    """Normalized cross-correlation of the two detectors' event trains.

    The estimate in each lag bin is the pair count divided by the count an
    independent pair of Poisson trains with the same singles rates would
    produce; standard errors take the per-bin pair counts as Poisson.
    """
    ids = stream.detector_ids()
    if ids.size < 2:
        raise ValueError("g2 needs events on two detectors")
    if stream.n_events < MIN_G2_EVENTS:
        raise ValueError(f"g2 needs at least {MIN_G2_EVENTS} events, got {stream.n_events}")
    if bin_width is None or bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if lags is None:
        if max_lag is None:
            raise ValueError("pass either a lag grid or max_lag")
        lags = symmetric_lags(max_lag, bin_width)
    lags = np.asarray(lags, dtype=float)

    t0 = stream.detector_times_ns(int(ids[0]))
    t1 = stream.detector_times_ns(int(ids[1]))
    r0 = t0.size / stream.duration
    r1 = t1.size / stream.duration
    b_ns = int(round(bin_width * 1e9))
    half_lo = b_ns // 2
    half_hi = b_ns - half_lo
    counts = np.empty(lags.size, dtype=float)
    for i, lag in enumerate(lags):
        c_ns = int(round(lag * 1e9))
        lo = np.searchsorted(t1, t0 + (c_ns - half_lo), side="left")
        hi = np.searchsorted(t1, t0 + (c_ns + half_hi), side="left")
        counts[i] = float(np.sum(hi - lo))
    effective = np.maximum(stream.duration - np.abs(lags), bin_width)
    norm = r0 * r1 * bin_width * effective
    values = counts / norm
    stderr = np.sqrt(np.maximum(counts, 1.0)) / norm
    return G2Curve(lags=lags, g2=values, stderr=stderr, bin_width=bin_width)


# ---------------------------------------------------------------------------
# coincidence counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoincidenceReport:
    window: float
    raw: int                       # pairs with |t0 - t1| <= window/2
    accidental: float              # rate_0 * rate_1 * window * duration
    corrected: float               # max(0, raw - accidental)
    correction_dominated: bool


def coincidences(stream: ClickStream, window: float) -> CoincidenceReport:
    """Sliding-window pair count with its accidental baseline.

    Never raises: a stream without events on two detectors reports zeros.
    """
    ids = stream.detector_ids()
    if ids.size < 2:
        return CoincidenceReport(window, 0, 0.0, 0.0, False)
    t0 = stream.detector_times_ns(int(ids[0]))
    t1 = stream.detector_times_ns(int(ids[1]))
    half_ns = int(round(window * 1e9 / 2.0))
    lo = np.searchsorted(t1, t0 - half_ns, side="left")
    hi = np.searchsorted(t1, t0 + half_ns, side="right")
    raw = int(np.sum(hi - lo))
    r0 = t0.size / stream.duration
    r1 = t1.size / stream.duration
    accidental = r0 * r1 * window * stream.duration
    corrected = max(0.0, raw - accidental)
    return CoincidenceReport(
        window=window,
        raw=raw,
        accidental=float(accidental),
        corrected=float(corrected),
        correction_dominated=bool(raw < 2.0 * accidental),
    )


# ---------------------------------------------------------------------------
# decay-curve model comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayModelFit:
    model: str
    params: dict[str, float]
    rss: float
    aic: float
    converged: bool


@dataclass(frozen=True)
class DecayFitReport:
    fits: tuple[DecayModelFit, ...]   # AIC ascending
    best_model: str
    indeterminate: bool


def _exp_curve(t, i0, tau):
    return i0 * np.exp(-t / tau)


def _hyp_curve(t, i0, tau, p):
    return i0 / (1.0 + t / tau) ** p


def _modulation(t, m, omega, phi):
    return 1.0 + m * np.cos(omega * t + phi)


_MODEL_NAMES = {
    "exponential": ("i0", "tau"),
    "hyperbolic": ("i0", "tau", "p"),
    "exponential_modulated": ("i0", "tau", "m", "omega", "phi"),
    "hyperbolic_modulated": ("i0", "tau", "p", "m", "omega", "phi"),
}


def _decode(model: str, u: np.ndarray) -> dict[str, float]:
    names = _MODEL_NAMES[model]
    out = {}
    for name, value in zip(names, u):
        if name == "m":
            out[name] = 1.0 / (1.0 + math.exp(-value))
        elif name == "phi":
            out[name] = value
        else:
            out[name] = math.exp(value)
    return out


def _encode(model: str, params: dict[str, float]) -> np.ndarray:
    names = _MODEL_NAMES[model]
    u = []
    for name in names:
        v = params[name]
        if name == "m":
            v = min(max(v, 1e-4), 1 - 1e-4)
            u.append(math.log(v / (1 - v)))
        elif name == "phi":
            u.append(v)
        else:
            u.append(math.log(max(v, 1e-12)))
    return np.asarray(u)


def _evaluate(model: str, t: np.ndarray, params: dict[str, float]) -> np.ndarray:
    if model.startswith("exponential"):
        curve = _exp_curve(t, params["i0"], params["tau"])
    else:
        curve = _hyp_curve(t, params["i0"], params["tau"], params["p"])
    if model.endswith("modulated"):
        curve = curve * _modulation(t, params["m"], params["omega"], params["phi"])
    return curve


def _dominant_frequencies(t: np.ndarray, y: np.ndarray, how_many: int = 2) -> list[float]:
    if t.size < 8:
        return []
    dt = float(np.median(np.diff(t)))
    detrended = y - y.mean()
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(t.size, dt)
    order = np.argsort(spectrum[1:])[::-1] + 1
    return [2 * math.pi * float(freqs[i]) for i in order[:how_many] if freqs[i] > 0]


def _fit_one_model(model: str, t: np.ndarray, y: np.ndarray) -> DecayModelFit:
    span = max(float(t.max() - t.min()), 1e-12)
    i0 = max(float(y.max()), 1e-9)
    starts: list[dict[str, float]] = []
    taus = [span / 10, span / 3, span]
    if model == "exponential":
        starts = [{"i0": i0, "tau": tau} for tau in taus]
    elif model == "hyperbolic":
        starts = [
            {"i0": i0, "tau": tau, "p": p}
            for tau in [span / 20, span / 5, span]
            for p in (0.5, 1.5, 3.0, 6.0)
        ]
    else:
        omegas = _dominant_frequencies(t, y) or [2 * math.pi / span]
        base = "exponential" if model.startswith("exponential") else "hyperbolic"
        base_params = _fit_one_model(base, t, y).params
        for omega in omegas:
            s = dict(base_params)
            s.update({"m": 0.3, "omega": omega, "phi": 0.0})
            starts.append(s)

    def objective(u):
        params = _decode(model, u)
        resid = y - _evaluate(model, t, params)
        return float(resid @ resid)

    best = None
    converged = False
    for start in starts:
        try:
            res = optimize.minimize(
                objective,
                _encode(model, start),
                method="Nelder-Mead",
                options={"maxiter": 6000, "xatol": 1e-10, "fatol": 1e-14},
            )
        except (ValueError, OverflowError):
            continue
        if best is None or res.fun < best.fun:
            best = res
            converged = bool(res.success)
    if best is None:
        return DecayModelFit(model, {}, math.inf, math.inf, False)
    params = _decode(model, best.x)
    rss = float(best.fun)
    n = t.size
    k = len(_MODEL_NAMES[model])
    floor = n * (1e-12 * max(1.0, float(np.abs(y).max()))) ** 2
    aic = n * math.log(max(rss, floor) / n) + 2 * k
    return DecayModelFit(model, params, rss, aic, converged)


def fit_decay(
    times: np.ndarray, counts: np.ndarray, include_modulated: bool = False
) -> DecayFitReport:
    """Least-squares comparison of exponential vs hyperbolic decay models.

    Both decay laws can optionally carry a cosine intensity modulation.
    Models are ranked by AIC; `indeterminate` is set when a constant
    baseline explains the data as well as the best decay law (both fits
    have degenerated to flat curves).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(counts, dtype=float)
    if t.size != y.size:
        raise ValueError("times and counts must have equal length")
    if t.size < 10:
        raise ValueError("need at least 10 points")
    if np.any(y < 0):
        raise ValueError("counts must be nonnegative")
    models = ["exponential", "hyperbolic"]
    if include_modulated:
        models += ["exponential_modulated", "hyperbolic_modulated"]
    fits = sorted((_fit_one_model(m, t, y) for m in models), key=lambda f: f.aic)
    n = t.size
    resid_const = y - y.mean()
    rss_const = float(resid_const @ resid_const)
    floor = n * (1e-12 * max(1.0, float(np.abs(y).max()))) ** 2
    aic_const = n * math.log(max(rss_const, floor) / n) + 2 * 1
    indeterminate = bool(aic_const <= fits[0].aic)
    return DecayFitReport(tuple(fits), fits[0].model, indeterminate)
