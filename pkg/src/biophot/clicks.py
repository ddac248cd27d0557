"""Monte Carlo click-stream generation for photon sources and detectors.

Four source kinds are supported:

* ``coherent`` - homogeneous Poisson emissions, split 50/50 between the two
  detectors.
* ``thermal`` - doubly stochastic Poisson process whose intensity is the
  squared modulus of a complex Ornstein-Uhlenbeck field.  The intensity is
  exponentially distributed at each instant and exponentially correlated
  with the requested coherence time, which pins the zero-lag pair
  correlation at 2.
* ``single_emitter`` - renewal process: each emission cycle waits for an
  exponential re-excitation and an exponential radiative delay, so two
  photons can never leave at once.
* ``pair_source`` - Poisson pair emissions; each pair puts one photon in
  each arm at the same instant (polarization analysis lives elsewhere).

Detector imperfections are applied per arm in a fixed order: efficiency
thinning, independent Poisson dark counts, quantization to integer
nanoseconds, and a dead-time filter.  Timestamps are generated already
quantized to nanoseconds, so writing a stream to the text format and
reading it back is lossless.

Click-file format (``clickstream v1``): UTF-8 text, header line
``# clickstream v1 duration_s=<float>`` followed by one event per line,
``timestamp_ns<TAB>detector_id`` with an optional third column reserved for
an outcome label.  Timestamps must be strictly increasing per detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .qcore import DensityMatrix

__all__ = [
    "SourceModel",
    "DetectorModel",
    "ClickStream",
    "ClickFormatError",
    "simulate_clicks",
    "clickstream_text",
    "write_clickstream",
    "parse_clickstream",
    "read_clickstream",
]

SOURCE_KINDS = ("coherent", "thermal", "single_emitter", "pair_source")

# time resolution of the click format
NS = 1e-9


@dataclass(frozen=True)
class DetectorModel:
    """Efficiency, dark-count rate (Hz), and dead time (s) of one detector."""

    efficiency: float = 1.0
    dark_rate: float = 0.0
    dead_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.dark_rate < 0 or self.dead_time < 0:
            raise ValueError("dark_rate and dead_time must be nonnegative")


@dataclass(frozen=True)
class SourceModel:
    """Photon source taxonomy with kind-specific parameters."""

    kind: str
    mean_rate: float
    coherence_time: float | None = None
    emitter_lifetime: float | None = None
    pair_state: DensityMatrix | None = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.mean_rate <= 0:
            raise ValueError("mean_rate must be positive")
        requirements = {
            "thermal": ("coherence_time", self.coherence_time),
            "single_emitter": ("emitter_lifetime", self.emitter_lifetime),
        }
        for kind, (name, value) in requirements.items():
            if self.kind == kind and (value is None or value <= 0):
                raise ValueError(f"{kind} source requires positive {name}")
            if self.kind != kind and value is not None:
                raise ValueError(f"{name} only applies to {kind} sources")
        if self.kind == "pair_source":
            if self.pair_state is not None and self.pair_state.dims != (2, 2):
                raise ValueError("pair_state must be a qubit-pair density matrix")
        elif self.pair_state is not None:
            raise ValueError("pair_state only applies to pair_source")
        if self.kind == "single_emitter" and self.mean_rate * self.emitter_lifetime >= 1:
            raise ValueError(
                "single emitter cannot sustain mean_rate with this lifetime "
                "(mean_rate * emitter_lifetime must be < 1)"
            )

    @classmethod
    def coherent(cls, mean_rate: float) -> "SourceModel":
        return cls("coherent", mean_rate)

    @classmethod
    def thermal(cls, mean_rate: float, coherence_time: float) -> "SourceModel":
        return cls("thermal", mean_rate, coherence_time=coherence_time)

    @classmethod
    def single_emitter(cls, mean_rate: float, emitter_lifetime: float) -> "SourceModel":
        return cls("single_emitter", mean_rate, emitter_lifetime=emitter_lifetime)

    @classmethod
    def pair_source(cls, mean_rate: float, pair_state: DensityMatrix | None = None) -> "SourceModel":
        return cls("pair_source", mean_rate, pair_state=pair_state)


@dataclass(frozen=True, eq=False)
class ClickStream:
    """Time-ordered detector events over a fixed acquisition window.

    `times_ns` holds integer nanoseconds, globally sorted (ties broken by
    detector id); per-detector timestamps are strictly increasing.
    """

    times_ns: np.ndarray
    detectors: np.ndarray
    duration: float
    seed: int | None = None
    source_kind: str | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        times = np.asarray(self.times_ns, dtype=np.int64)
        dets = np.asarray(self.detectors, dtype=np.int16)
        if times.shape != dets.shape or times.ndim != 1:
            raise ValueError("times and detector ids must be matching 1-d arrays")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        duration_ns = int(round(self.duration / NS))
        if self.labels is not None and len(self.labels) != times.size:
            raise ValueError("labels must match the number of events")
        if times.size:
            if times.min() < 0 or times.max() > duration_ns:
                raise ValueError("timestamps must lie in [0, duration]")
            order = np.lexsort((dets, times))
            times = times[order]
            dets = dets[order]
            if self.labels is not None:
                object.__setattr__(
                    self, "labels", tuple(np.asarray(self.labels, dtype=object)[order])
                )
            for det in np.unique(dets):
                own = times[dets == det]
                if np.any(np.diff(own) <= 0):
                    raise ValueError(f"timestamps not strictly increasing on detector {det}")
        times.flags.writeable = False
        dets.flags.writeable = False
        object.__setattr__(self, "times_ns", times)
        object.__setattr__(self, "detectors", dets)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClickStream):
            return NotImplemented
        return (
            self.duration == other.duration
            and np.array_equal(self.times_ns, other.times_ns)
            and np.array_equal(self.detectors, other.detectors)
        )

    @property
    def n_events(self) -> int:
        return int(self.times_ns.size)

    @property
    def times(self) -> np.ndarray:
        """Timestamps in seconds."""
        return self.times_ns * NS

    def detector_ids(self) -> np.ndarray:
        return np.unique(self.detectors)

    def detector_times(self, detector_id: int) -> np.ndarray:
        """Seconds, strictly increasing, for one detector."""
        return self.times_ns[self.detectors == detector_id] * NS

    def detector_times_ns(self, detector_id: int) -> np.ndarray:
        return self.times_ns[self.detectors == detector_id]

    def rate(self, detector_id: int) -> float:
        return float(np.count_nonzero(self.detectors == detector_id) / self.duration)


# ---------------------------------------------------------------------------
# emission-time samplers
# ---------------------------------------------------------------------------

def _cumulative_arrivals(draw_gaps, duration: float) -> np.ndarray:
    """Accumulate positive gaps from `draw_gaps(n)` until `duration` is covered."""
    chunks = []
    t_last = 0.0
    while t_last < duration:
        gaps = draw_gaps(4096)
        times = t_last + np.cumsum(gaps)
        chunks.append(times)
        t_last = float(times[-1])
    times = np.concatenate(chunks)
    return times[times < duration]


def _poisson_times(rate: float, duration: float, rng: np.random.Generator) -> np.ndarray:
    if rate <= 0:
        return np.empty(0)
    return _cumulative_arrivals(lambda n: rng.exponential(1.0 / rate, size=n), duration)


def _renewal_times(
    rate: float, lifetime: float, duration: float, rng: np.random.Generator
) -> np.ndarray:
    # each cycle: exponential re-excitation wait plus exponential radiative
    # delay; the pump time is set so the mean cycle matches 1/rate
    pump = 1.0 / rate - lifetime

    def gaps(n):
        return rng.exponential(pump, size=n) + rng.exponential(lifetime, size=n)

    return _cumulative_arrivals(gaps, duration)


def _thermal_times(
    rate: float, coherence_time: float, duration: float, rng: np.random.Generator
) -> np.ndarray:
    # complex Ornstein-Uhlenbeck field with relaxation time 2*tau_c, so the
    # intensity |E|^2 decorrelates as exp(-tau/tau_c) and is exponentially
    # distributed at every instant
    dt = coherence_time / 50.0
    n_steps = int(math.ceil(duration / dt))
    phi = math.exp(-dt / (2.0 * coherence_time))
    noise_scale = math.sqrt((1.0 - phi * phi) / 2.0)
    drive = noise_scale * (
        rng.normal(size=n_steps) + 1j * rng.normal(size=n_steps)
    )
    drive[0] = (rng.normal() + 1j * rng.normal()) / math.sqrt(2.0)
    field_re = lfilter([1.0], [1.0, -phi], drive.real)
    field_im = lfilter([1.0], [1.0, -phi], drive.imag)
    intensity = rate * (field_re**2 + field_im**2)
    counts = rng.poisson(intensity * dt)
    total = int(counts.sum())
    if total == 0:
        return np.empty(0)
    starts = np.repeat(np.arange(n_steps) * dt, counts)
    times = np.sort(starts + rng.uniform(0.0, dt, size=total))
    return times[times < duration]


def _dead_time_filter(times_ns: np.ndarray, dead_ns: int) -> np.ndarray:
    if dead_ns <= 0 or times_ns.size == 0:
        return times_ns
    accepted = [int(times_ns[0])]
    last = accepted[0]
    for t in times_ns[1:]:
        if t - last >= dead_ns:
            accepted.append(int(t))
            last = int(t)
    return np.asarray(accepted, dtype=np.int64)


def simulate_clicks(
    source: SourceModel,
    detectors: tuple[DetectorModel, DetectorModel],
    duration: float,
    seed: int,
) -> ClickStream:
    """Generate the click record of a two-detector acquisition.

    Fully reproducible: the same (source, detectors, duration, seed) returns a
    bit-identical stream.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if len(detectors) != 2:
        raise ValueError("exactly two detectors are required")
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    if source.kind == "coherent":
        emissions = _poisson_times(source.mean_rate, duration, rng)
        arms = rng.integers(0, 2, size=emissions.size)
    elif source.kind == "thermal":
        emissions = _thermal_times(source.mean_rate, source.coherence_time, duration, rng)
        arms = rng.integers(0, 2, size=emissions.size)
    elif source.kind == "single_emitter":
        emissions = _renewal_times(source.mean_rate, source.emitter_lifetime, duration, rng)
        arms = rng.integers(0, 2, size=emissions.size)
    else:  # pair_source: one photon per arm at the same instant
        pair_times = _poisson_times(source.mean_rate, duration, rng)
        emissions = np.repeat(pair_times, 2)
        arms = np.tile(np.array([0, 1]), pair_times.size)

    duration_ns = int(round(duration / NS))
    all_times: list[np.ndarray] = []
    all_dets: list[np.ndarray] = []
    for det_id, det in enumerate(detectors):
        own = emissions[arms == det_id]
        if det.efficiency < 1.0:
            own = own[rng.random(own.size) < det.efficiency]
        darks = _poisson_times(det.dark_rate, duration, rng)
        merged = np.concatenate([own, darks])
        ts = np.unique(np.round(merged / NS).astype(np.int64))
        ts = ts[(ts >= 0) & (ts <= duration_ns)]
        ts = _dead_time_filter(ts, int(round(det.dead_time / NS)))
        all_times.append(ts)
        all_dets.append(np.full(ts.size, det_id, dtype=np.int16))

    return ClickStream(
        np.concatenate(all_times),
        np.concatenate(all_dets),
        duration,
        seed=seed,
        source_kind=source.kind,
    )


# ---------------------------------------------------------------------------
# clickstream v1 text format
# ---------------------------------------------------------------------------

class ClickFormatError(ValueError):
    """Malformed click file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def clickstream_text(stream: ClickStream) -> str:
    lines = [f"# clickstream v1 duration_s={stream.duration!r}"]
    for t, d in zip(stream.times_ns, stream.detectors):
        lines.append(f"{t}\t{d}")
    return "\n".join(lines) + "\n"


def write_clickstream(stream: ClickStream, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(clickstream_text(stream))


def parse_clickstream(text: str) -> ClickStream:
    lines = text.splitlines()
    if not lines:
        raise ClickFormatError("empty file, expected clickstream v1 header", 1)
    header = lines[0]
    prefix = "# clickstream v1 duration_s="
    if not header.startswith(prefix):
        raise ClickFormatError(f"bad header {header!r}", 1)
    try:
        duration = float(header[len(prefix):])
    except ValueError:
        raise ClickFormatError("unreadable duration in header", 1) from None
    if duration <= 0:
        raise ClickFormatError("duration must be positive", 1)
    duration_ns = int(round(duration / NS))

    times: list[int] = []
    dets: list[int] = []
    labels: list[str] = []
    last_seen: dict[int, int] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) not in (2, 3):
            raise ClickFormatError(
                f"expected 'timestamp_ns<TAB>detector_id', got {raw!r}", lineno
            )
        try:
            t = int(parts[0])
            d = int(parts[1])
        except ValueError:
            raise ClickFormatError(f"non-integer field in {raw!r}", lineno) from None
        if t < 0 or t > duration_ns:
            raise ClickFormatError(
                f"timestamp {t} outside [0, {duration_ns}] ns", lineno
            )
        if d in last_seen and t <= last_seen[d]:
            raise ClickFormatError(
                f"timestamp {t} not increasing on detector {d}", lineno
            )
        last_seen[d] = t
        times.append(t)
        dets.append(d)
        labels.append(parts[2] if len(parts) == 3 else "")

    has_labels = any(labels)
    return ClickStream(
        np.asarray(times, dtype=np.int64),
        np.asarray(dets, dtype=np.int16),
        duration,
        labels=tuple(labels) if has_labels else None,
    )


def read_clickstream(path) -> ClickStream:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_clickstream(fh.read())
