"""Two bosonic modes coupled by an excitation-exchange interaction.

The total Hamiltonian is

    H = omega_a a^dag a + omega_b b^dag b + i lam (a^dag b - a b^dag)

with hbar = 1, so frequencies and the coupling are inverse times.  The
exchange term conserves the total quantum number, which is also what keeps
truncated-basis simulations honest: a state that never climbs the Fock
ladder never feels the cutoff.

The module provides exact propagation by eigendecomposition, the c-number
flow of the mode amplitudes, diagnostics for how far a state sits from the
nearest coherent product, the biorthogonal-coupling norm behind the
product-preservation condition, and an entropy-ranking scan over candidate
initial states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .qcore import (
    Operator,
    PureState,
    TruncationError,
    annihilation,
    coherent_amplitudes,
    coherent_state,
    fock_state,
    identity_operator,
    number_operator,
    random_pure_state,
    spectrum_entropy,
    tensor,
)
from .serialize import csv_text

__all__ = [
    "OscillatorConfig",
    "AmplitudePair",
    "Trajectory",
    "EinCandidate",
    "EinScanEntry",
    "EinScanReport",
    "TOP_LEVEL_GUARD",
    "build_hamiltonian",
    "ModePropagator",
    "evolve",
    "top_level_population",
    "amplitude_flow",
    "mean_amplitudes",
    "coherence_defect",
    "biorthogonal_leakage",
    "simulate_trajectory",
    "exchange_period",
    "coherent_candidates",
    "fock_candidates",
    "random_product_candidates",
    "ein_scan",
    "trajectory_csv",
    "ranking_csv",
]

# maximum tolerated population of the highest retained Fock level
TOP_LEVEL_GUARD = 1e-6


@dataclass(frozen=True)
class OscillatorConfig:
    """Frequencies, coupling, and Fock cutoffs of the two modes."""

    omega_a: float
    omega_b: float
    coupling: float
    cutoff_a: int = 24
    cutoff_b: int = 24

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError("coupling must be nonnegative")
        if self.cutoff_a < 2 or self.cutoff_b < 2:
            raise ValueError("cutoffs must be >= 2")

    @property
    def resonant(self) -> bool:
        return self.omega_a == self.omega_b

    @property
    def dims(self) -> tuple[int, int]:
        return (self.cutoff_a, self.cutoff_b)


@dataclass(frozen=True)
class AmplitudePair:
    """Coherent amplitudes of the two modes at a given time."""

    mu_a: complex
    mu_b: complex
    time: float = 0.0


def exchange_period(config: OscillatorConfig) -> float:
    """One full excitation-exchange period 2 pi / coupling."""
    if config.coupling == 0:
        raise ValueError("free evolution has no exchange period")
    return 2.0 * math.pi / config.coupling


def build_hamiltonian(config: OscillatorConfig) -> tuple[Operator, Operator]:
    """Total Hamiltonian and the bare exchange coupling, as a pair."""
    na, nb = config.cutoff_a, config.cutoff_b
    a = tensor(annihilation(na), identity_operator(nb))
    b = tensor(identity_operator(na), annihilation(nb))
    exchange = 1j * config.coupling * (
        a.dag().entries @ b.entries - a.entries @ b.dag().entries
    )
    free = (
        config.omega_a * tensor(number_operator(na), identity_operator(nb)).entries
        + config.omega_b * tensor(identity_operator(na), number_operator(nb)).entries
    )
    dims = (na, nb)
    return Operator(free + exchange, dims), Operator(exchange, dims)


def top_level_population(psi: PureState) -> float:
    """Occupation probability of the highest retained Fock level, per mode summed."""
    if len(psi.dims) != 2:
        raise ValueError("expected a two-mode state")
    mat = np.abs(psi.amplitudes.reshape(psi.dims)) ** 2
    return float(mat[-1, :].sum() + mat[:, -1].sum())


class ModePropagator:
    """Exact propagator exp(-iHt) via one Hermitian eigendecomposition.

    H is time independent, so diagonalizing once removes any integrator
    tolerance from downstream comparisons.
    """

    def __init__(self, config: OscillatorConfig, guard: float = TOP_LEVEL_GUARD):
        self.config = config
        self.guard = guard
        hamiltonian, _ = build_hamiltonian(config)
        self._evals, self._evecs = np.linalg.eigh(hamiltonian.entries)

    def _check_guard(self, psi: PureState, t: float) -> float:
        pop = top_level_population(psi)
        if pop >= self.guard:
            raise TruncationError(
                f"top Fock level population {pop:.3e} >= {self.guard:.1e} "
                f"at t={t:g}; increase the cutoffs"
            )
        return pop

    def evolve(self, psi: PureState, t: float) -> PureState:
        if psi.dims != self.config.dims:
            raise ValueError(f"state dims {psi.dims} do not match config {self.config.dims}")
        self._check_guard(psi, 0.0)
        coeffs = self._evecs.conj().T @ psi.amplitudes
        out = PureState(self._evecs @ (np.exp(-1j * self._evals * t) * coeffs), psi.dims)
        self._check_guard(out, t)
        return out

    def evolve_many(self, psi: PureState, times: np.ndarray) -> list[PureState]:
        if psi.dims != self.config.dims:
            raise ValueError(f"state dims {psi.dims} do not match config {self.config.dims}")
        self._check_guard(psi, 0.0)
        coeffs = self._evecs.conj().T @ psi.amplitudes
        states = []
        for t in times:
            out = PureState(self._evecs @ (np.exp(-1j * self._evals * t) * coeffs), psi.dims)
            self._check_guard(out, float(t))
            states.append(out)
        return states


def evolve(psi: PureState, config: OscillatorConfig, t: float) -> PureState:
    return ModePropagator(config).evolve(psi, t)


def amplitude_flow(initial: AmplitudePair, config: OscillatorConfig, t: float) -> AmplitudePair:
    """Closed 2x2 linear flow of the mode amplitudes.

    d mu_a/dt = -i omega_a mu_a + lam mu_b
    d mu_b/dt = -i omega_b mu_b - lam mu_a

    On resonance the solution is a phase times a rotation; off resonance the
    2x2 system is solved exactly by matrix exponential.
    """
    lam = config.coupling
    if config.resonant:
        phase = np.exp(-1j * config.omega_a * t)
        c, s = math.cos(lam * t), math.sin(lam * t)
        mu_a = phase * (initial.mu_a * c + initial.mu_b * s)
        mu_b = phase * (-initial.mu_a * s + initial.mu_b * c)
        return AmplitudePair(complex(mu_a), complex(mu_b), initial.time + t)
    gen = np.array(
        [[-1j * config.omega_a, lam], [-lam, -1j * config.omega_b]], dtype=complex
    )
    mu = expm(gen * t) @ np.array([initial.mu_a, initial.mu_b], dtype=complex)
    return AmplitudePair(complex(mu[0]), complex(mu[1]), initial.time + t)


def mean_amplitudes(psi: PureState) -> tuple[complex, complex]:
    """First moments <a>, <b> of a two-mode pure state."""
    if len(psi.dims) != 2:
        raise ValueError("expected a two-mode state")
    mat = psi.amplitudes.reshape(psi.dims)
    roots_a = np.sqrt(np.arange(1, psi.dims[0]))
    roots_b = np.sqrt(np.arange(1, psi.dims[1]))
    mu_a = np.sum(np.conj(mat[:-1, :]) * (roots_a[:, None] * mat[1:, :]))
    mu_b = np.sum(np.conj(mat[:, :-1]) * (roots_b[None, :] * mat[:, 1:]))
    return complex(mu_a), complex(mu_b)


def coherence_defect(psi: PureState) -> float:
    """Distance 1 - |<mu_a, mu_b | psi>|^2 to the coherent product with the
    state's own mean amplitudes."""
    mu_a, mu_b = mean_amplitudes(psi)
    ca = coherent_amplitudes(mu_a, psi.dims[0])
    cb = coherent_amplitudes(mu_b, psi.dims[1])
    ref = np.kron(ca / np.linalg.norm(ca), cb / np.linalg.norm(cb))
    overlap = np.vdot(ref, psi.amplitudes)
    return float(max(0.0, 1.0 - abs(overlap) ** 2))


def biorthogonal_leakage(
    psi_a: PureState, psi_b: PureState, config: OscillatorConfig
) -> float:
    """Norm of the exchange coupling's image in the biorthogonal subspace.

    For a product state u (x) v, this is || (1-P_u)(x)(1-P_v) H_int (u (x) v) ||.
    A factorized state stays factorized exactly when this vanishes along the
    trajectory; coherent products make it vanish identically because each
    ladder term keeps an exact factor on one side.
    """
    if psi_a.dims != (config.cutoff_a,) or psi_b.dims != (config.cutoff_b,):
        raise ValueError("factor dims do not match the config cutoffs")
    for factor in (psi_a, psi_b):
        if abs(factor.norm() - 1.0) > 1e-10:
            raise ValueError("factors must be normalized")
    _, interaction = build_hamiltonian(config)
    image = interaction.entries @ np.kron(psi_a.amplitudes, psi_b.amplitudes)
    mat = image.reshape(config.dims)
    u = psi_a.amplitudes
    v = psi_b.amplitudes
    mat = mat - np.outer(u, np.conj(u) @ mat)
    mat = mat - np.outer(mat @ np.conj(v), v)
    return float(np.linalg.norm(mat))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Time series of states with their reduced entropies and coherence defects."""

    times: np.ndarray
    states: tuple[PureState, ...]
    entropies: np.ndarray
    defects: np.ndarray
    top_level: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.states) == len(self.entropies) == len(self.defects) == n):
            raise ValueError("trajectory arrays must have equal length")
        if np.any(np.asarray(self.entropies) < -1e-12):
            raise ValueError("negative entropy in trajectory")


def _reduced_entropy(psi: PureState) -> float:
    mat = psi.amplitudes.reshape(psi.dims)
    weights = np.linalg.svd(mat, compute_uv=False) ** 2
    return spectrum_entropy(np.clip(weights, 0.0, None))


def simulate_trajectory(
    psi0: PureState, config: OscillatorConfig, times: np.ndarray
) -> Trajectory:
    prop = ModePropagator(config)
    states = prop.evolve_many(psi0, np.asarray(times, dtype=float))
    entropies = np.array([_reduced_entropy(s) for s in states])
    defects = np.array([coherence_defect(s) for s in states])
    top = np.array([top_level_population(s) for s in states])
    return Trajectory(np.asarray(times, dtype=float), tuple(states), entropies, defects, top)


def trajectory_csv(traj: Trajectory) -> str:
    rows = zip(traj.times, traj.entropies, traj.defects, traj.top_level)
    return csv_text(["t", "entropy", "defect", "top_level_population"], rows)


# ---------------------------------------------------------------------------
# entropy-ranking scan over candidate initial states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EinCandidate:
    label: str
    family: str  # "coherent" | "fock" | "random"
    state: PureState


@dataclass(frozen=True)
class EinScanEntry:
    label: str
    family: str
    mean_entropy: float
    max_entropy: float


@dataclass(frozen=True)
class EinScanReport:
    entries: tuple[EinScanEntry, ...]  # sorted ascending by mean entropy
    horizon: float
    samples: int
    coherent_below_fock: bool


def _fmt_mu(mu: complex) -> str:
    mu = complex(mu)
    if mu.imag == 0:
        return f"{mu.real:.4g}"
    return f"{mu.real:.4g}{mu.imag:+.4g}j"


def coherent_candidates(
    amplitudes_a, amplitudes_b, config: OscillatorConfig
) -> list[EinCandidate]:
    out = []
    for mu_a in amplitudes_a:
        for mu_b in amplitudes_b:
            sa, _ = coherent_state(mu_a, config.cutoff_a)
            sb, _ = coherent_state(mu_b, config.cutoff_b)
            state = tensor(sa, sb)
            label = f"coherent mu_a={_fmt_mu(mu_a)} mu_b={_fmt_mu(mu_b)}"
            out.append(EinCandidate(label, "coherent", state))
    return out


def fock_candidates(max_total: int, config: OscillatorConfig) -> list[EinCandidate]:
    out = []
    for n in range(min(max_total, config.cutoff_a - 1) + 1):
        for m in range(min(max_total - n, config.cutoff_b - 1) + 1):
            if n + m == 0 or n + m > max_total:
                continue
            state = tensor(fock_state(n, config.cutoff_a), fock_state(m, config.cutoff_b))
            out.append(EinCandidate(f"fock n={n} m={m}", "fock", state))
    return out


def random_product_candidates(
    count: int, config: OscillatorConfig, seed: int
) -> list[EinCandidate]:
    """Haar-random product states restricted to the bottom half of each cutoff
    so the truncation guard stays satisfied."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = []
    half_a, half_b = config.cutoff_a // 2, config.cutoff_b // 2
    for k in range(count):
        va = np.zeros(config.cutoff_a, dtype=complex)
        va[:half_a] = random_pure_state(half_a, rng).amplitudes
        vb = np.zeros(config.cutoff_b, dtype=complex)
        vb[:half_b] = random_pure_state(half_b, rng).amplitudes
        state = tensor(PureState(va, (config.cutoff_a,)), PureState(vb, (config.cutoff_b,)))
        out.append(EinCandidate(f"random #{k}", "random", state))
    return out


def ein_scan(
    config: OscillatorConfig,
    candidates: list[EinCandidate],
    horizon: float | None = None,
    samples: int = 64,
) -> EinScanReport:
    """Rank candidate initial states by time-averaged reduced entropy.

    Each candidate is propagated over [0, horizon] (default: one exchange
    period) at `samples` uniform times; entries come back sorted ascending.
    `coherent_below_fock` records whether every coherent product averaged
    strictly below every excited Fock pair.
    """
    if not candidates:
        raise ValueError("no candidates supplied")
    horizon = exchange_period(config) if horizon is None else float(horizon)
    times = np.linspace(0.0, horizon, samples)
    prop = ModePropagator(config)
    entries = []
    for cand in candidates:
        states = prop.evolve_many(cand.state, times)
        ent = np.array([_reduced_entropy(s) for s in states])
        entries.append(
            EinScanEntry(cand.label, cand.family, float(ent.mean()), float(ent.max()))
        )
    entries.sort(key=lambda e: (e.mean_entropy, e.label))
    coherent_means = [e.mean_entropy for e in entries if e.family == "coherent"]
    fock_means = [e.mean_entropy for e in entries if e.family == "fock"]
    below = bool(
        coherent_means
        and fock_means
        and max(coherent_means) < min(fock_means)
    )
    return EinScanReport(tuple(entries), horizon, samples, below)


def ranking_csv(report: EinScanReport) -> str:
    rows = [
        (rank, e.family, e.label, e.mean_entropy, e.max_entropy)
        for rank, e in enumerate(report.entries)
    ]
    return csv_text(["rank", "family", "label", "mean_entropy", "max_entropy"], rows)
