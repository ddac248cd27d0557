"""Scenario orchestration: validated configs in, reproducible artifacts out.

A run is described by one JSON config file::

    {
      "scenario": "evolve" | "ein_scan" | "clicks" | "g2" | "counting" |
                  "decay_fit" | "tomo_sim" | "tomo_fit" | "bell" | "full_pipeline",
      "seed": 123,                  # mandatory for stochastic scenarios
      "outdir": "runs/my-run",      # relative paths resolve under the output root
      "params": { ... }             # scenario-specific block, see README
    }

Artifacts are written only after the whole computation succeeds; a failed
run leaves just the manifest with the failure record.  Numeric CSV cells
carry 17 significant digits and JSON floats use shortest round-trip
representation, so identical config+seed reproduces byte-identical numeric
artifacts.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .clicks import (
    ClickStream,
    DetectorModel,
    SourceModel,
    clickstream_text,
    read_clickstream,
    simulate_clicks,
)
from .clickstats import coincidences, counting_stats, fit_decay, g2, waiting_times
from .modes import (
    AmplitudePair,
    OscillatorConfig,
    amplitude_flow,
    biorthogonal_leakage,
    coherent_candidates,
    ein_scan,
    exchange_period,
    fock_candidates,
    mean_amplitudes,
    random_product_candidates,
    ranking_csv,
    simulate_trajectory,
    trajectory_csv,
)
from .qcore import (
    DensityMatrix,
    TruncationError,
    coherent_state,
    fidelity,
    fock_state,
    schmidt,
    tensor,
)
from .serialize import csv_text, json_text
from .tomo import (
    CHSH_CANONICAL_ANGLES,
    CountTable,
    MeasurementScheme,
    chsh,
    chsh_optimize,
    entanglement_report,
    linear_inversion,
    mle_reconstruct,
    product_state,
    scheme_by_kind,
    simulate_tomography,
    singlet_state,
    werner_state,
    white_noise_fraction,
)

__all__ = [
    "ConfigError",
    "NumericError",
    "SCENARIO_KINDS",
    "STOCHASTIC_SCENARIOS",
    "SCENARIO_OPERATIONS",
    "ALL_CORE_OPERATIONS",
    "OUTPUT_ROOT_ENV",
    "MANIFEST_NAME",
    "load_config",
    "config_digest",
    "resolve_outdir",
    "run_scenario",
    "execute_config",
    "build_summary",
]

OUTPUT_ROOT_ENV = "BIOPHOT_RUNS"
MANIFEST_NAME = "run_manifest.json"

SCENARIO_KINDS = (
    "evolve",
    "ein_scan",
    "clicks",
    "g2",
    "counting",
    "decay_fit",
    "tomo_sim",
    "tomo_fit",
    "bell",
    "full_pipeline",
)

STOCHASTIC_SCENARIOS = frozenset(
    {"clicks", "g2", "counting", "decay_fit", "tomo_sim", "full_pipeline"}
)

# which core operations each scenario exercises; the coverage test checks the
# union spans every operation of the four core modules
SCENARIO_OPERATIONS = {
    "evolve": (
        "coherent_state", "tensor", "build_hamiltonian", "evolve", "schmidt",
        "amplitude_flow", "coherence_defect", "biorthogonal_leakage",
    ),
    "ein_scan": ("build_hamiltonian", "evolve", "ein_scan", "coherent_state", "tensor"),
    "clicks": ("simulate_clicks", "waiting_times"),
    "g2": ("simulate_clicks", "g2", "coincidences"),
    "counting": ("simulate_clicks", "counting_stats", "waiting_times"),
    "decay_fit": ("fit_decay",),
    "tomo_sim": ("scheme_mub", "scheme_sic", "born_probabilities", "simulate_tomography"),
    "tomo_fit": (
        "linear_inversion", "mle_reconstruct", "concurrence", "witness_value",
        "chsh_optimize", "entropy", "partial_trace",
    ),
    "bell": ("chsh", "chsh_optimize"),
    "full_pipeline": (
        "scheme_mub", "scheme_sic", "born_probabilities", "simulate_tomography",
        "linear_inversion", "mle_reconstruct", "concurrence", "witness_value",
        "chsh_optimize", "fidelity", "entropy", "partial_trace",
    ),
}

ALL_CORE_OPERATIONS = frozenset(
    {
        # dense linear algebra
        "coherent_state", "annihilation", "tensor", "partial_trace", "schmidt",
        "entropy", "fidelity",
        # coupled modes
        "build_hamiltonian", "evolve", "amplitude_flow", "coherence_defect",
        "biorthogonal_leakage", "ein_scan",
        # click statistics
        "simulate_clicks", "waiting_times", "counting_stats", "g2",
        "coincidences", "fit_decay",
        # tomography
        "scheme_mub", "scheme_sic", "born_probabilities", "simulate_tomography",
        "linear_inversion", "mle_reconstruct", "concurrence", "witness_value",
        "chsh", "chsh_optimize",
    }
)
# build_hamiltonian subsumes annihilation; every scenario state build uses it
SCENARIO_OPERATIONS["evolve"] = SCENARIO_OPERATIONS["evolve"] + ("annihilation",)


class ConfigError(ValueError):
    """The config parsed but failed validation."""


class NumericError(RuntimeError):
    """A computation failed to converge or left its valid regime."""


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    return config


def config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def resolve_outdir(config: dict, out_root: str | None = None) -> Path:
    outdir = config.get("outdir")
    if not outdir or not isinstance(outdir, str):
        raise ConfigError("config must name an 'outdir'")
    path = Path(outdir)
    if not path.is_absolute():
        root = out_root or os.environ.get(OUTPUT_ROOT_ENV, "runs")
        path = Path(root) / path
    return path


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _get(params: dict, key: str, kind, default=None, required: bool = False):
    if key not in params:
        _require(not required, f"missing required parameter {key!r}")
        return default
    value = params[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    _require(isinstance(value, kind), f"parameter {key!r} must be {kind}")
    return value


def _validate_common(config: dict) -> tuple[str, dict, int | None]:
    kind = config.get("scenario")
    _require(kind in SCENARIO_KINDS, f"unknown scenario {kind!r}")
    params = config.get("params", {})
    _require(isinstance(params, dict), "'params' must be an object")
    seed = config.get("seed")
    if kind in STOCHASTIC_SCENARIOS:
        _require(isinstance(seed, int), f"scenario {kind!r} requires an integer seed")
    elif seed is not None:
        _require(isinstance(seed, int), "seed must be an integer")
    return kind, params, seed


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------

def _complex_of(value, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    _require(
        isinstance(value, list) and len(value) == 2,
        f"{name} must be a number or an [re, im] pair",
    )
    return complex(float(value[0]), float(value[1]))


def _oscillator_config(params: dict) -> OscillatorConfig:
    try:
        return OscillatorConfig(
            omega_a=_get(params, "omega_a", (int, float), required=True),
            omega_b=_get(params, "omega_b", (int, float), required=True),
            coupling=_get(params, "coupling", (int, float), required=True),
            cutoff_a=_get(params, "cutoff_a", int, 24),
            cutoff_b=_get(params, "cutoff_b", int, 24),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _initial_state(params: dict, config: OscillatorConfig):
    block = _get(params, "initial", dict, required=True)
    kind = block.get("kind")
    if kind == "coherent":
        mu_a = _complex_of(block.get("mu_a", 0.0), "mu_a")
        mu_b = _complex_of(block.get("mu_b", 0.0), "mu_b")
        state_a, _ = coherent_state(mu_a, config.cutoff_a)
        state_b, _ = coherent_state(mu_b, config.cutoff_b)
        return tensor(state_a, state_b), (state_a, state_b), (mu_a, mu_b)
    if kind == "fock":
        n_a = _get(block, "n_a", int, 0)
        n_b = _get(block, "n_b", int, 0)
        _require(0 <= n_a < config.cutoff_a, "n_a outside the cutoff")
        _require(0 <= n_b < config.cutoff_b, "n_b outside the cutoff")
        state_a = fock_state(n_a, config.cutoff_a)
        state_b = fock_state(n_b, config.cutoff_b)
        return tensor(state_a, state_b), (state_a, state_b), None
    raise ConfigError(f"initial state kind must be 'coherent' or 'fock', got {kind!r}")


def _source_model(block: dict) -> SourceModel:
    _require(isinstance(block, dict), "'source' must be an object")
    kind = block.get("kind")
    rate = block.get("mean_rate")
    pair_state = None
    if "pair_state" in block:
        pair_state = _true_state(block["pair_state"])
    try:
        return SourceModel(
            kind=kind,
            mean_rate=rate,
            coherence_time=block.get("coherence_time"),
            emitter_lifetime=block.get("emitter_lifetime"),
            pair_state=pair_state,
        )
    except (ValueError, TypeError) as err:
        raise ConfigError(f"invalid source: {err}") from None


def _detector_models(params: dict) -> tuple[DetectorModel, DetectorModel]:
    blocks = params.get("detectors", [{}, {}])
    _require(
        isinstance(blocks, list) and len(blocks) == 2,
        "'detectors' must be a list of two objects",
    )
    out = []
    for block in blocks:
        _require(isinstance(block, dict), "each detector must be an object")
        try:
            out.append(
                DetectorModel(
                    efficiency=block.get("efficiency", 1.0),
                    dark_rate=block.get("dark_rate", 0.0),
                    dead_time=block.get("dead_time", 0.0),
                )
            )
        except (ValueError, TypeError) as err:
            raise ConfigError(f"invalid detector: {err}") from None
    return out[0], out[1]


def _true_state(block) -> DensityMatrix:
    _require(isinstance(block, dict), "'state' must be an object")
    kind = block.get("kind")
    if kind == "singlet":
        return singlet_state()
    if kind == "werner":
        w = block.get("w")
        _require(isinstance(w, (int, float)), "werner state needs a mixing weight 'w'")
        try:
            return werner_state(float(w))
        except ValueError as err:
            raise ConfigError(str(err)) from None
    if kind == "product":
        try:
            return product_state(block.get("bloch_a"), block.get("bloch_b"))
        except (ValueError, TypeError) as err:
            raise ConfigError(f"invalid product state: {err}") from None
    if kind == "matrix":
        entries = block.get("entries")
        _require(isinstance(entries, list) and len(entries) == 4, "matrix needs 4 rows")
        try:
            mat = np.array(
                [[complex(cell[0], cell[1]) for cell in row] for row in entries]
            )
            return DensityMatrix(mat, (2, 2))
        except (ValueError, TypeError, IndexError) as err:
            raise ConfigError(f"invalid matrix state: {err}") from None
    raise ConfigError(f"unknown state kind {kind!r}")


def _rho_json(rho: DensityMatrix) -> list:
    return [[[float(cell.real), float(cell.imag)] for cell in row] for row in rho.entries]


def _stream_for(params: dict, seed: int | None, inputs: dict) -> ClickStream:
    if "input" in params:
        path = params["input"]
        _require(isinstance(path, str), "'input' must be a file path")
        stream = read_clickstream(path)
        inputs[path] = _file_digest(path)
        return stream
    source = _source_model(_get(params, "source", dict, required=True))
    detectors = _detector_models(params)
    duration = _get(params, "duration", (int, float), required=True)
    _require(duration > 0, "duration must be positive")
    _require(seed is not None, "simulated click scenarios need a seed")
    return simulate_clicks(source, detectors, float(duration), seed)


# ---------------------------------------------------------------------------
# scenario implementations
# ---------------------------------------------------------------------------

def _run_evolve(params: dict, seed: int | None, inputs: dict) -> dict:
    config = _oscillator_config(params)
    psi0, factors, amplitudes = _initial_state(params, config)
    horizon = _get(params, "horizon", (int, float))
    if horizon is None:
        horizon = exchange_period(config) if config.coupling > 0 else 10.0
    samples = _get(params, "samples", int, 64)
    _require(samples >= 2, "need at least 2 samples")
    times = np.linspace(0.0, float(horizon), samples)
    traj = simulate_trajectory(psi0, config, times)

    flow_rows = []
    max_flow_err = 0.0
    if amplitudes is not None:
        start = AmplitudePair(*amplitudes)
        for t, state in zip(traj.times, traj.states):
            mu_a, mu_b = mean_amplitudes(state)
            flowed = amplitude_flow(start, config, float(t))
            err_a = abs(mu_a - flowed.mu_a)
            err_b = abs(mu_b - flowed.mu_b)
            max_flow_err = max(max_flow_err, err_a, err_b)
            flow_rows.append(
                (t, mu_a.real, mu_a.imag, flowed.mu_a.real, flowed.mu_a.imag,
                 mu_b.real, mu_b.imag, flowed.mu_b.real, flowed.mu_b.imag,
                 err_a, err_b)
            )

    leakage = biorthogonal_leakage(factors[0], factors[1], config)
    final_weights = schmidt(traj.states[-1]).weights

    artifacts: dict[str, object] = {
        "trajectory.csv": trajectory_csv(traj),
        "trajectory.json": {
            "times": [float(t) for t in traj.times],
            "entropies": [float(x) for x in traj.entropies],
            "defects": [float(x) for x in traj.defects],
            "top_level_population": [float(x) for x in traj.top_level],
            "max_entropy": float(traj.entropies.max()),
            "max_defect": float(traj.defects.max()),
            "final_schmidt_weights": [float(w) for w in final_weights],
            "initial_leakage": float(leakage),
            "horizon": float(horizon),
        },
        "lemma.json": {
            "biorthogonal_leakage": float(leakage),
            "coupling": config.coupling,
        },
    }
    if flow_rows:
        artifacts["flow_comparison.csv"] = csv_text(
            ["t", "re_a_full", "im_a_full", "re_a_flow", "im_a_flow",
             "re_b_full", "im_b_full", "re_b_flow", "im_b_flow",
             "err_a", "err_b"],
            flow_rows,
        )
        artifacts["trajectory.json"]["max_flow_error"] = max_flow_err
    return artifacts


def _run_ein_scan(params: dict, seed: int | None, inputs: dict) -> dict:
    config = _oscillator_config(params)
    magnitudes = _get(params, "coherent_magnitudes", list, [0.0, 0.5, 1.0, 1.5])
    phases = _get(params, "coherent_phases", list, [0.0])
    amplitudes = sorted(
        {
            complex(m * math.cos(p), m * math.sin(p))
            for m in magnitudes
            for p in phases
        },
        key=lambda z: (abs(z), z.real, z.imag),
    )
    candidates = coherent_candidates(amplitudes, amplitudes, config)
    fock_max = _get(params, "fock_max_total", int, 3)
    if fock_max > 0:
        candidates += fock_candidates(fock_max, config)
    random_count = _get(params, "random_count", int, 0)
    if random_count > 0:
        _require(seed is not None, "random candidates need a seed")
        candidates += random_product_candidates(random_count, config, seed)
    horizon = _get(params, "horizon", (int, float))
    samples = _get(params, "samples", int, 64)
    report = ein_scan(config, candidates, horizon, samples)
    return {
        "ranking.csv": ranking_csv(report),
        "ranking.json": {
            "horizon": report.horizon,
            "samples": report.samples,
            "coherent_below_fock": report.coherent_below_fock,
            "entries": [
                {
                    "rank": rank,
                    "label": e.label,
                    "family": e.family,
                    "mean_entropy": e.mean_entropy,
                    "max_entropy": e.max_entropy,
                }
                for rank, e in enumerate(report.entries)
            ],
        },
    }


def _run_clicks(params: dict, seed: int | None, inputs: dict) -> dict:
    stream = _stream_for(params, seed, inputs)
    artifacts: dict[str, object] = {"clicks.txt": clickstream_text(stream)}
    summary = {
        "duration": stream.duration,
        "n_events": stream.n_events,
        "detectors": {},
        "source_kind": stream.source_kind,
    }
    waiting = {}
    for det in (int(d) for d in stream.detector_ids()):
        n = int(np.count_nonzero(stream.detectors == det))
        summary["detectors"][str(det)] = {"events": n, "rate": n / stream.duration}
        if n >= 102:
            report = waiting_times(stream, det)
            waiting[str(det)] = {
                "rate_estimate": report.rate_estimate,
                "ks_distance": report.ks_distance,
                "ks_critical_1pct": report.ks_critical_1pct,
                "exponential_at_1pct": report.exponential_at_1pct,
                "n_gaps": report.n_gaps,
            }
            artifacts[f"waiting_times_det{det}.csv"] = csv_text(
                ["gap_low", "gap_high", "count"],
                zip(report.hist_edges[:-1], report.hist_edges[1:], report.hist_counts),
            )
    summary["waiting_times"] = waiting
    artifacts["clicks_summary.json"] = summary
    return artifacts


def _run_g2(params: dict, seed: int | None, inputs: dict) -> dict:
    stream = _stream_for(params, seed, inputs)
    bin_width = _get(params, "bin_width", (int, float), required=True)
    max_lag = _get(params, "max_lag", (int, float), required=True)
    curve = g2(stream, bin_width=float(bin_width), max_lag=float(max_lag))
    zero_value, zero_err = curve.at_zero()
    window = _get(params, "coincidence_window", (int, float), float(bin_width))
    pairs = coincidences(stream, float(window))
    return {
        "g2.csv": csv_text(
            ["lag", "g2", "stderr"], zip(curve.lags, curve.g2, curve.stderr)
        ),
        "g2.json": {
            "bin_width": curve.bin_width,
            "zero_lag": {"g2": zero_value, "stderr": zero_err},
            "classification": _classify_g2(zero_value, zero_err),
            "n_events": stream.n_events,
        },
        "coincidences.json": {
            "window": pairs.window,
            "raw": pairs.raw,
            "accidental": pairs.accidental,
            "corrected": pairs.corrected,
            "correction_dominated": pairs.correction_dominated,
        },
    }


def _classify_g2(value: float, err: float) -> str:
    if value + 3 * err < 1.0:
        return "anti-bunched"
    if value - 3 * err > 1.0:
        return "bunched"
    return "Poissonian"


def _classify_q(q: float, err: float) -> str:
    if q + 4 * err < 0.0:
        return "sub-Poissonian"
    if q - 4 * err > 0.0:
        return "super-Poissonian"
    return "Poissonian"


def _run_counting(params: dict, seed: int | None, inputs: dict) -> dict:
    stream = _stream_for(params, seed, inputs)
    window = _get(params, "window", (int, float), required=True)
    detector = params.get("detector_id")
    if detector is not None:
        _require(isinstance(detector, int), "detector_id must be an integer")
    try:
        report = counting_stats(stream, float(window), detector)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return {
        "counting.csv": csv_text(
            ["count", "windows"], zip(report.count_values, report.count_freqs)
        ),
        "counting.json": {
            "window": report.window,
            "n_windows": report.n_windows,
            "mean": report.mean,
            "variance": report.variance,
            "fano": report.fano,
            "mandel_q": report.mandel_q,
            "q_stderr": report.q_stderr,
            "chi2_pvalue": report.chi2_pvalue,
            "classification": _classify_q(report.mandel_q, report.q_stderr),
        },
    }


def _run_decay_fit(params: dict, seed: int | None, inputs: dict) -> dict:
    if "series" in params:
        block = _get(params, "series", dict, required=True)
        t = np.asarray(block.get("t"), dtype=float)
        y = np.asarray(block.get("counts"), dtype=float)
    else:
        block = _get(params, "synthetic", dict, required=True)
        model = block.get("model")
        _require(model in ("exponential", "hyperbolic"), "synthetic model must be exponential or hyperbolic")
        _require(seed is not None, "synthetic decay data needs a seed")
        n_points = block.get("n_points", 60)
        t_max = block.get("t_max", 3.0)
        i0 = block.get("i0", 1000.0)
        tau = block.get("tau", 1.0)
        t = np.linspace(0.0, float(t_max), int(n_points))
        if model == "exponential":
            curve = i0 * np.exp(-t / tau)
        else:
            curve = i0 / (1.0 + t / tau) ** float(block.get("p", 2.0))
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        y = rng.poisson(curve).astype(float)
    include_mod = bool(params.get("include_modulated", False))
    try:
        report = fit_decay(t, y, include_modulated=include_mod)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return {
        "decay_data.csv": csv_text(["t", "counts"], zip(t, y)),
        "decay_fit.json": {
            "best_model": report.best_model,
            "indeterminate": report.indeterminate,
            "fits": [
                {
                    "model": f.model,
                    "params": {k: float(v) for k, v in f.params.items()},
                    "rss": f.rss,
                    "aic": f.aic,
                    "converged": f.converged,
                }
                for f in report.fits
            ],
        },
    }


def _noise_fraction(params: dict) -> float:
    if "noise_bridge" in params:
        block = _get(params, "noise_bridge", dict, required=True)
        try:
            detector = DetectorModel(
                efficiency=block.get("efficiency", 1.0),
                dark_rate=block.get("dark_rate", 0.0),
            )
            return white_noise_fraction(
                block.get("pair_rate"), detector, block.get("window")
            )
        except (ValueError, TypeError) as err:
            raise ConfigError(f"invalid noise bridge: {err}") from None
    f = params.get("noise_fraction", 0.0)
    _require(isinstance(f, (int, float)) and 0.0 <= f <= 1.0, "noise_fraction must lie in [0, 1]")
    return float(f)


def _scheme_of(params: dict) -> MeasurementScheme:
    kind = params.get("scheme", "mub")
    try:
        return scheme_by_kind(kind)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _run_tomo_sim(params: dict, seed: int | None, inputs: dict) -> dict:
    rho = _true_state(_get(params, "state", dict, required=True))
    scheme = _scheme_of(params)
    shots = _get(params, "shots", int, required=True)
    _require(shots >= 1, "shots must be >= 1")
    fraction = _noise_fraction(params)
    table = simulate_tomography(rho, scheme, shots, fraction, seed)
    return {
        "counts.json": table.to_json_dict(),
        "tomo_sim.json": {
            "scheme": scheme.kind,
            "shots_per_setting": shots,
            "noise_fraction": fraction,
            "true_state": _rho_json(rho),
        },
    }


def _fit_results(table: CountTable, params: dict) -> tuple[dict, DensityMatrix | None]:
    method = params.get("method", "both")
    _require(method in ("both", "mle", "linear_inversion"), "method must be both, mle, or linear_inversion")
    tolerance = float(params.get("tolerance", 1e-9))
    max_iterations = int(params.get("max_iterations", 10_000))
    out: dict[str, object] = {"scheme": table.scheme_kind, "shots_per_setting": table.shots_per_setting}
    physical_rho = None
    if method in ("both", "linear_inversion"):
        lin = linear_inversion(table)
        out["linear_inversion"] = {
            "rho": _rho_json(lin.rho),
            "physical": lin.physical,
            "min_eigenvalue": lin.rho.min_eigenvalue,
            "log_likelihood": lin.log_likelihood,
        }
        if lin.physical:
            physical_rho = lin.rho
    if method in ("both", "mle"):
        mle = mle_reconstruct(table, tolerance=tolerance, max_iterations=max_iterations)
        if not mle.converged:
            raise NumericError(
                f"likelihood maximization did not converge within {max_iterations} "
                f"iterations (residual {mle.residual:.3e})"
            )
        out["mle"] = {
            "rho": _rho_json(mle.rho),
            "physical": mle.physical,
            "min_eigenvalue": mle.rho.min_eigenvalue,
            "log_likelihood": mle.log_likelihood,
            "iterations": mle.iterations,
            "residual": mle.residual,
            "converged": mle.converged,
        }
        physical_rho = mle.rho
    return out, physical_rho


def _entanglement_json(rho: DensityMatrix) -> dict:
    report = entanglement_report(rho)
    return {
        "concurrence": report.concurrence,
        "witness": report.witness,
        "chsh": {
            "value": report.chsh_value,
            "angles_rad": list(report.chsh_angles),
            "angles_deg": [math.degrees(a) for a in report.chsh_angles],
            "violates_classical_bound": report.chsh_value > 2.0,
        },
        "reduced_entropies": [report.entropy_a, report.entropy_b],
    }


def _run_tomo_fit(params: dict, seed: int | None, inputs: dict) -> dict:
    path = _get(params, "counts_file", str, required=True)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            table = CountTable.from_json(fh.read())
    except FileNotFoundError:
        raise ConfigError(f"counts file not found: {path}") from None
    except (json.JSONDecodeError, ValueError, KeyError) as err:
        raise ConfigError(f"unreadable counts file {path}: {err}") from None
    inputs[path] = _file_digest(path)
    results, physical_rho = _fit_results(table, params)
    artifacts = {"tomography.json": results}
    if physical_rho is not None:
        artifacts["entanglement.json"] = _entanglement_json(physical_rho)
    return artifacts


def _run_bell(params: dict, seed: int | None, inputs: dict) -> dict:
    rho = _true_state(_get(params, "state", dict, required=True))
    if "angles_deg" in params:
        block = params["angles_deg"]
        _require(
            isinstance(block, list) and len(block) == 4,
            "angles_deg must be a list of four analyzer angles",
        )
        angles = tuple(math.radians(float(a)) for a in block)
    else:
        angles = CHSH_CANONICAL_ANGLES
    fixed = chsh(rho, angles)
    best = chsh_optimize(rho)
    return {
        "bell.json": {
            "angles_deg": [math.degrees(a) for a in angles],
            "s_at_angles": fixed,
            "abs_s_at_angles": abs(fixed),
            "optimized": {
                "value": best.value,
                "angles_rad": list(best.angles),
                "angles_deg": [math.degrees(a) for a in best.angles],
            },
            "classical_bound": 2.0,
            "quantum_bound": 2.0 * math.sqrt(2.0),
            "violates_classical_bound": max(abs(fixed), best.value) > 2.0,
        }
    }


def _run_full_pipeline(params: dict, seed: int | None, inputs: dict) -> dict:
    rho_true = _true_state(_get(params, "state", dict, required=True))
    sim_artifacts = _run_tomo_sim(params, seed, inputs)
    table = CountTable.from_json_dict(sim_artifacts["counts.json"])
    results, physical_rho = _fit_results(table, params)
    artifacts = dict(sim_artifacts)
    artifacts["tomography.json"] = results
    if physical_rho is None:
        raise NumericError("no physical estimate produced; cannot report measures")
    artifacts["entanglement.json"] = _entanglement_json(physical_rho)
    fid = fidelity(physical_rho, rho_true)
    artifacts["pipeline_summary.json"] = {
        "fidelity_to_truth": fid,
        "root_fidelity_to_truth": math.sqrt(fid),
        "concurrence": artifacts["entanglement.json"]["concurrence"],
        "witness": artifacts["entanglement.json"]["witness"],
        "chsh": artifacts["entanglement.json"]["chsh"]["value"],
    }
    return artifacts


_RUNNERS = {
    "evolve": _run_evolve,
    "ein_scan": _run_ein_scan,
    "clicks": _run_clicks,
    "g2": _run_g2,
    "counting": _run_counting,
    "decay_fit": _run_decay_fit,
    "tomo_sim": _run_tomo_sim,
    "tomo_fit": _run_tomo_fit,
    "bell": _run_bell,
    "full_pipeline": _run_full_pipeline,
}


# ---------------------------------------------------------------------------
# execution and manifest
# ---------------------------------------------------------------------------

def run_scenario(config: dict) -> tuple[dict, dict]:
    """Validate and run; returns (artifacts, input_digests).  No files touched."""
    kind, params, seed = _validate_common(config)
    inputs: dict[str, str] = {}
    artifacts = _RUNNERS[kind](params, seed, inputs)
    return artifacts, inputs


def _artifact_bytes(value) -> bytes:
    if isinstance(value, str):
        return value.encode()
    if isinstance(value, (dict, list)):
        return json_text(value).encode()
    raise TypeError(f"cannot serialize artifact of type {type(value).__name__}")


def _clear_previous_artifacts(outdir: Path) -> None:
    manifest_path = outdir / MANIFEST_NAME
    if not manifest_path.exists():
        return
    try:
        old = json.loads(manifest_path.read_text())
    except json.JSONDecodeError:
        return
    for name in old.get("artifacts", []):
        stale = outdir / name
        if stale.exists():
            stale.unlink()


def _write_manifest(outdir: Path, manifest: dict) -> None:
    (outdir / MANIFEST_NAME).write_text(json_text(manifest), encoding="utf-8")


def execute_config(config: dict, out_root: str | None = None) -> Path:
    """Run one scenario config and write its artifacts plus the manifest.

    On failure the output directory holds only the manifest with the failure
    record (stale artifacts from earlier runs are removed), and the original
    exception propagates.
    """
    outdir = resolve_outdir(config, out_root)
    base_manifest = {
        "tool_version": __version__,
        "scenario": config.get("scenario"),
        "config": config,
        "config_sha256": config_digest(config),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    try:
        artifacts, inputs = run_scenario(config)
        payload = {name: _artifact_bytes(value) for name, value in artifacts.items()}
    except Exception as err:
        outdir.mkdir(parents=True, exist_ok=True)
        _clear_previous_artifacts(outdir)
        _write_manifest(
            outdir,
            {
                **base_manifest,
                "status": "error",
                "error": {"type": type(err).__name__, "message": str(err)},
                "inputs": {},
                "artifacts": [],
            },
        )
        raise
    outdir.mkdir(parents=True, exist_ok=True)
    _clear_previous_artifacts(outdir)
    for name, data in sorted(payload.items()):
        (outdir / name).write_bytes(data)
    _write_manifest(
        outdir,
        {
            **base_manifest,
            "status": "ok",
            "error": None,
            "inputs": inputs,
            "artifacts": sorted(payload),
        },
    )
    return outdir


# ---------------------------------------------------------------------------
# report summaries
# ---------------------------------------------------------------------------

def _load_artifact(outdir: Path, name: str):
    path = outdir / name
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {name} in {outdir}")
    if name.endswith(".json"):
        return json.loads(path.read_text())
    return path.read_text()


def build_summary(outdir: Path) -> tuple[dict, str]:
    """Key numbers and a human-readable digest for a finished run."""
    outdir = Path(outdir)
    manifest = json.loads((outdir / MANIFEST_NAME).read_text())
    kind = manifest["scenario"]
    if manifest.get("status") != "ok":
        error = manifest.get("error") or {}
        text = f"run failed: {error.get('type')}: {error.get('message')}"
        return {"scenario": kind, "status": "error", "error": error}, text

    lines = [f"scenario: {kind}"]
    summary: dict[str, object] = {"scenario": kind, "status": "ok"}

    if kind == "evolve":
        data = _load_artifact(outdir, "trajectory.json")
        summary.update(
            max_entropy=data["max_entropy"],
            max_defect=data["max_defect"],
            initial_leakage=data["initial_leakage"],
            max_flow_error=data.get("max_flow_error"),
        )
        lines.append(f"max reduced entropy = {data['max_entropy']:.3e} nats "
                     f"({data['max_entropy'] / math.log(2):.3e} bits)")
        lines.append(f"max coherence defect = {data['max_defect']:.3e}")
        if data["max_defect"] < 1e-6:
            lines.append("state stayed a coherent product over the whole horizon")
        if data.get("max_flow_error") is not None:
            lines.append(f"max |<a> - flow| = {data['max_flow_error']:.3e}")
        lines.append(f"biorthogonal leakage at t=0 = {data['initial_leakage']:.3e}")
    elif kind == "ein_scan":
        data = _load_artifact(outdir, "ranking.json")
        entries = data["entries"]
        summary.update(
            coherent_below_fock=data["coherent_below_fock"],
            best=entries[0],
            worst=entries[-1],
        )
        lines.append(f"{len(entries)} candidates over horizon {data['horizon']:.4g}")
        lines.append(
            f"lowest mean entropy: {entries[0]['label']} ({entries[0]['mean_entropy']:.3e})"
        )
        lines.append(
            f"highest mean entropy: {entries[-1]['label']} ({entries[-1]['mean_entropy']:.3e})"
        )
        verdict = "yes" if data["coherent_below_fock"] else "no"
        lines.append(f"every coherent product below every excited Fock pair: {verdict}")
    elif kind == "clicks":
        data = _load_artifact(outdir, "clicks_summary.json")
        summary.update(n_events=data["n_events"], detectors=data["detectors"])
        lines.append(f"{data['n_events']} events over {data['duration']:.4g} s")
        for det, block in sorted(data["detectors"].items()):
            lines.append(f"detector {det}: {block['events']} events ({block['rate']:.4g}/s)")
        for det, block in sorted(data.get("waiting_times", {}).items()):
            verdict = "exponential" if block["exponential_at_1pct"] else "NOT exponential"
            lines.append(
                f"detector {det} gaps: KS={block['ks_distance']:.4f} "
                f"(1% critical {block['ks_critical_1pct']:.4f}) -> {verdict} at the 1% level"
            )
    elif kind == "g2":
        data = _load_artifact(outdir, "g2.json")
        pairs = _load_artifact(outdir, "coincidences.json")
        zero = data["zero_lag"]
        summary.update(g2_zero=zero["g2"], g2_stderr=zero["stderr"],
                       classification=data["classification"], coincidences=pairs)
        lines.append(
            f"g2(0) = {zero['g2']:.3f} +/- {zero['stderr']:.3f} ({data['classification']})"
        )
        lines.append(
            f"coincidences in {pairs['window']:.3g} s window: raw {pairs['raw']}, "
            f"accidental {pairs['accidental']:.1f}, corrected {pairs['corrected']:.1f}"
        )
    elif kind == "counting":
        data = _load_artifact(outdir, "counting.json")
        summary.update(mandel_q=data["mandel_q"], q_stderr=data["q_stderr"],
                       classification=data["classification"], chi2_pvalue=data["chi2_pvalue"])
        lines.append(
            f"Q = {data['mandel_q']:.4f} +/- {data['q_stderr']:.4f} ({data['classification']})"
        )
        lines.append(f"Poisson chi-square p-value = {data['chi2_pvalue']:.3g}")
    elif kind == "decay_fit":
        data = _load_artifact(outdir, "decay_fit.json")
        best = data["fits"][0]
        summary.update(best_model=data["best_model"], indeterminate=data["indeterminate"],
                       best_params=best["params"])
        lines.append(f"best model by AIC: {data['best_model']}")
        shown = ", ".join(f"{k}={v:.4g}" for k, v in best["params"].items())
        lines.append(f"parameters: {shown}")
        if len(data["fits"]) > 1:
            margin = data["fits"][1]["aic"] - best["aic"]
            lines.append(f"AIC margin over runner-up: {margin:.2f}")
        if data["indeterminate"]:
            lines.append("flagged indeterminate: a flat baseline explains the data as well")
    elif kind == "tomo_sim":
        data = _load_artifact(outdir, "tomo_sim.json")
        summary.update(scheme=data["scheme"], shots=data["shots_per_setting"],
                       noise_fraction=data["noise_fraction"])
        lines.append(
            f"simulated {data['scheme']} tomography, {data['shots_per_setting']} shots/setting, "
            f"white-noise fraction {data['noise_fraction']:.4g}"
        )
    elif kind in ("tomo_fit", "full_pipeline"):
        ent = _load_artifact(outdir, "entanglement.json")
        summary.update(concurrence=ent["concurrence"], witness=ent["witness"],
                       chsh=ent["chsh"]["value"])
        s = ent["chsh"]["value"]
        verdict = "> 2: local realism violated" if s > 2 else "<= 2: no violation found"
        lines.append(f"concurrence = {ent['concurrence']:.4f}")
        lines.append(f"witness value = {ent['witness']:.4f} "
                     f"({'entangled' if ent['witness'] < 0 else 'not witnessed'})")
        lines.append(f"S = {s:.3f} ({verdict})")
        lines.append(
            "reduced entropies = "
            + ", ".join(f"{x:.4f}" for x in ent["reduced_entropies"]) + " nats"
        )
        if kind == "full_pipeline":
            pipe = _load_artifact(outdir, "pipeline_summary.json")
            summary.update(fidelity=pipe["fidelity_to_truth"],
                           root_fidelity=pipe["root_fidelity_to_truth"])
            lines.append(f"fidelity to truth = {pipe['fidelity_to_truth']:.4f} "
                         f"(root fidelity {pipe['root_fidelity_to_truth']:.4f})")
    elif kind == "bell":
        data = _load_artifact(outdir, "bell.json")
        summary.update(s_at_angles=data["s_at_angles"],
                       optimized=data["optimized"]["value"])
        s = data["abs_s_at_angles"]
        verdict = "> 2: local realism violated" if s > 2 else "<= 2: within the classical bound"
        lines.append(f"S = {s:.3f} ({verdict})")
        lines.append(f"optimized S = {data['optimized']['value']:.3f} at angles "
                     + ", ".join(f"{a:.2f} deg" for a in data["optimized"]["angles_deg"]))
    return summary, "\n".join(lines) + "\n"
