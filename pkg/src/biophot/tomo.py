"""Two-qubit polarization tomography and entanglement measures.

Measurement schemes
-------------------
* ``mub`` - each arm is measured in the three Pauli eigenbases (H/V, D/A,
  R/L polarization), 9 joint settings x 4 outcomes = 36 cells.
* ``sic`` - each arm realizes the tetrahedral four-outcome POVM (effects
  |psi_k><psi_k| / 2 with Bloch vectors at the corners of a regular
  tetrahedron), one joint setting with 16 cells.

Both schemes are informationally complete, so the linear Born map can be
inverted directly (least squares over the Hermitian unit-trace affine
space) or a physical estimate can be found by likelihood maximization with
the diluted R-rho-R fixed-point iteration.

Entanglement diagnostics: Wootters concurrence, a singlet-projector
witness, and the two-setting/two-outcome Bell combination S evaluated on
linear polarization-analyzer angles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .clicks import DetectorModel
from .qcore import DensityMatrix, PureState, entropy, partial_trace

__all__ = [
    "PAULI",
    "ArmSetting",
    "MeasurementScheme",
    "ProbabilityTable",
    "CountTable",
    "TomographyResult",
    "EntanglementReport",
    "ChshResult",
    "scheme_mub",
    "scheme_sic",
    "scheme_by_kind",
    "born_probabilities",
    "simulate_tomography",
    "exact_count_table",
    "linear_inversion",
    "mle_reconstruct",
    "concurrence",
    "witness_value",
    "chsh",
    "chsh_optimize",
    "entanglement_report",
    "white_noise_fraction",
    "singlet_state",
    "singlet_witness",
    "werner_state",
    "product_state",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

CHSH_CANONICAL_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


def singlet_state() -> DensityMatrix:
    """(|01> - |10>)/sqrt(2) as a density matrix."""
    vec = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
    return DensityMatrix(np.outer(vec, vec.conj()), (2, 2))


def werner_state(w: float) -> DensityMatrix:
    """w * singlet + (1 - w) * I/4."""
    if not 0.0 <= w <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    return DensityMatrix(
        w * singlet_state().entries + (1.0 - w) * np.eye(4) / 4.0, (2, 2)
    )


def product_state(bloch_a, bloch_b) -> DensityMatrix:
    """Product of two qubit states given by Bloch vectors (|v| <= 1)."""
    def single(v):
        v = np.asarray(v, dtype=float)
        if v.shape != (3,) or np.linalg.norm(v) > 1 + 1e-12:
            raise ValueError("Bloch vector must be a 3-vector of length <= 1")
        return (PAULI["I"] + v[0] * PAULI["X"] + v[1] * PAULI["Y"] + v[2] * PAULI["Z"]) / 2
    return DensityMatrix(np.kron(single(bloch_a), single(bloch_b)), (2, 2))


def singlet_witness() -> np.ndarray:
    """W = I/2 - |psi-><psi-|; negative expectation certifies entanglement."""
    return np.eye(4) / 2.0 - singlet_state().entries


# ---------------------------------------------------------------------------
# measurement schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArmSetting:
    """One local analyzer setting: outcome labels and their POVM effects."""

    label: str
    outcome_labels: tuple[str, ...]
    effects: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class MeasurementScheme:
    kind: str
    arm_settings: tuple[ArmSetting, ...]

    @property
    def n_settings(self) -> int:
        return len(self.arm_settings) ** 2

    @property
    def outcomes_per_setting(self) -> int:
        return len(self.arm_settings[0].outcome_labels) ** 2

    @property
    def n_cells(self) -> int:
        return self.n_settings * self.outcomes_per_setting

    def joint_settings(self):
        """Yield (setting_label, [(outcome_label, 4x4 effect), ...])."""
        for sa in self.arm_settings:
            for sb in self.arm_settings:
                label = f"{sa.label}|{sb.label}"
                cells = []
                for la, ea in zip(sa.outcome_labels, sa.effects):
                    for lb, eb in zip(sb.outcome_labels, sb.effects):
                        cells.append((f"{la}|{lb}", np.kron(ea, eb)))
                yield label, cells

    def setting_labels(self) -> list[str]:
        return [label for label, _ in self.joint_settings()]

    def outcome_labels(self) -> tuple[tuple[str, ...], ...]:
        return tuple(
            tuple(label for label, _ in cells) for _, cells in self.joint_settings()
        )


def _projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def scheme_mub() -> MeasurementScheme:
    """Pauli-eigenbasis tomography: H/V, D/A, R/L on each arm."""
    s = 1 / math.sqrt(2.0)
    settings = (
        ArmSetting("HV", ("H", "V"), (_projector([1, 0]), _projector([0, 1]))),
        ArmSetting("DA", ("D", "A"), (_projector([s, s]), _projector([s, -s]))),
        ArmSetting("RL", ("R", "L"), (_projector([s, 1j * s]), _projector([s, -1j * s]))),
    )
    return MeasurementScheme("mub", settings)


def scheme_sic() -> MeasurementScheme:
    """Tetrahedral POVM per arm, one vector pinned to the Bloch north pole."""
    vectors = [np.array([1.0, 0.0], dtype=complex)]
    polar = math.acos(-1.0 / 3.0)
    for k in range(3):
        azimuth = 2.0 * math.pi * k / 3.0
        vectors.append(
            np.array(
                [
                    math.cos(polar / 2.0),
                    math.sin(polar / 2.0) * np.exp(1j * azimuth),
                ],
                dtype=complex,
            )
        )
    effects = tuple(_projector(v) / 2.0 for v in vectors)
    labels = tuple(f"T{k}" for k in range(4))
    return MeasurementScheme("sic", (ArmSetting("SIC", labels, effects),))


def scheme_by_kind(kind: str) -> MeasurementScheme:
    if kind == "mub":
        return scheme_mub()
    if kind == "sic":
        return scheme_sic()
    raise ValueError(f"unknown scheme kind {kind!r}")


# ---------------------------------------------------------------------------
# probabilities and counts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbabilityTable:
    scheme_kind: str
    setting_labels: tuple[str, ...]
    outcome_labels: tuple[tuple[str, ...], ...]  # one tuple per setting
    probs: np.ndarray  # [setting, outcome]


@dataclass(frozen=True)
class CountTable:
    """Joint outcome counts per measurement setting.

    Counts are float-valued so exact (infinite-shot) tables can be carried;
    simulated tables are integers.  Rows must sum to shots_per_setting.
    """

    scheme_kind: str
    shots_per_setting: float
    setting_labels: tuple[str, ...]
    outcome_labels: tuple[tuple[str, ...], ...]
    counts: np.ndarray  # [setting, outcome]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        n_out = len(self.outcome_labels[0]) if self.outcome_labels else 0
        if counts.shape != (len(self.setting_labels), n_out):
            raise ValueError("counts shape does not match labels")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        sums = counts.sum(axis=1)
        if np.any(np.abs(sums - self.shots_per_setting) > 1e-6 * max(1.0, self.shots_per_setting)):
            raise ValueError("per-setting counts must sum to shots_per_setting")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots_per_setting

    def to_json_dict(self) -> dict:
        integral = bool(np.all(self.counts == np.round(self.counts)))
        def cell(x):
            return int(round(x)) if integral else float(x)
        return {
            "scheme": self.scheme_kind,
            "shots_per_setting": cell(self.shots_per_setting),
            "counts": {
                setting: {
                    outcome: cell(self.counts[i, j])
                    for j, outcome in enumerate(self.outcome_labels[i])
                }
                for i, setting in enumerate(self.setting_labels)
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CountTable":
        scheme = scheme_by_kind(data["scheme"])
        setting_labels = tuple(scheme.setting_labels())
        outcome_labels = scheme.outcome_labels()
        counts = np.zeros((len(setting_labels), len(outcome_labels[0])))
        try:
            for i, setting in enumerate(setting_labels):
                for j, outcome in enumerate(outcome_labels[i]):
                    counts[i, j] = data["counts"][setting][outcome]
        except KeyError as missing:
            raise ValueError(f"count table is missing cell {missing}") from None
        return cls(
            data["scheme"], float(data["shots_per_setting"]),
            setting_labels, outcome_labels, counts,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CountTable":
        return cls.from_json_dict(json.loads(text))


def born_probabilities(rho: DensityMatrix, scheme: MeasurementScheme) -> ProbabilityTable:
    """p(setting, outcome) = Tr(rho E_a (x) E_b) for every joint cell."""
    if rho.dims != (2, 2):
        raise ValueError("expected a qubit-pair density matrix")
    if not rho.positive:
        raise ValueError("born probabilities require a physical state")
    settings = []
    rows = []
    outcome_labels = []
    for label, cells in scheme.joint_settings():
        settings.append(label)
        rows.append([float(np.real(np.trace(rho.entries @ effect))) for _, effect in cells])
        outcome_labels.append(tuple(lbl for lbl, _ in cells))
    probs = np.clip(np.asarray(rows), 0.0, None)
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-10):
        raise ValueError("per-setting probabilities failed to sum to 1")
    return ProbabilityTable(scheme.kind, tuple(settings), tuple(outcome_labels), probs)


def simulate_tomography(
    rho: DensityMatrix,
    scheme: MeasurementScheme,
    shots: int,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> CountTable:
    """Multinomial sampling of the Born probabilities mixed with white noise.

    The noise fraction f models dark and accidental coincidences as a uniform
    background: p' = (1 - f) p + f / n_outcomes.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0.0 <= noise_fraction <= 1.0:
        raise ValueError("noise_fraction must lie in [0, 1]")
    table = born_probabilities(rho, scheme)
    n_out = table.probs.shape[1]
    mixed = (1.0 - noise_fraction) * table.probs + noise_fraction / n_out
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    counts = np.stack([rng.multinomial(shots, row / row.sum()) for row in mixed])
    return CountTable(
        scheme.kind, shots, table.setting_labels, table.outcome_labels,
        counts.astype(float),
    )


def exact_count_table(rho: DensityMatrix, scheme: MeasurementScheme, shots: float = 1.0) -> CountTable:
    """Infinite-shot-limit table: counts are exactly shots * probabilities."""
    table = born_probabilities(rho, scheme)
    return CountTable(
        scheme.kind, shots, table.setting_labels, table.outcome_labels,
        shots * table.probs,
    )


def white_noise_fraction(pair_rate: float, detector: DetectorModel, window: float) -> float:
    """Convert detector imperfections into the white-noise fraction f.

    Accidental coincidences per second are (singles rate)^2 * window with
    singles = efficiency * pair_rate + dark_rate; true coincidences arrive at
    efficiency^2 * pair_rate.  f is the accidental share of all coincidences.
    """
    if pair_rate <= 0 or window <= 0:
        raise ValueError("pair_rate and window must be positive")
    singles = detector.efficiency * pair_rate + detector.dark_rate
    accidental = singles * singles * window
    true_rate = detector.efficiency**2 * pair_rate
    if true_rate + accidental == 0.0:
        return 1.0
    return float(accidental / (true_rate + accidental))


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TomographyResult:
    rho: DensityMatrix
    method: str  # "linear_inversion" | "mle"
    physical: bool
    log_likelihood: float
    iterations: int
    residual: float
    converged: bool = True
    ll_history: tuple[float, ...] = ()


def _hermitian_basis() -> list[np.ndarray]:
    """Orthonormal Hermitian basis kron(P_i, P_j)/2 of the two-qubit space."""
    names = ["I", "X", "Y", "Z"]
    return [np.kron(PAULI[a], PAULI[b]) / 2.0 for a in names for b in names]


def _design_matrix(scheme: MeasurementScheme) -> tuple[np.ndarray, list[np.ndarray]]:
    basis = _hermitian_basis()
    rows = []
    for _, cells in scheme.joint_settings():
        for _, effect in cells:
            rows.append([float(np.real(np.trace(effect @ g))) for g in basis])
    return np.asarray(rows), basis


def _flat_effects(scheme: MeasurementScheme) -> list[np.ndarray]:
    return [effect for _, cells in scheme.joint_settings() for _, effect in cells]


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> float:
    p = np.clip(probs, 1e-12, None)
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log(p[mask])))


def linear_inversion(table: CountTable) -> TomographyResult:
    """Least-squares inversion of the linear Born map.

    The estimate is Hermitian with unit trace by construction; positivity is
    not enforced and is reported through the `physical` flag.
    """
    scheme = scheme_by_kind(table.scheme_kind)
    design, basis = _design_matrix(scheme)
    rank = np.linalg.matrix_rank(design)
    assert rank == 16, f"design matrix rank {rank}, scheme not informationally complete"
    freqs = table.frequencies().reshape(-1)
    # the identity coefficient is pinned by the trace; solve for the rest
    c0 = 0.5
    target = freqs - design[:, 0] * c0
    coeffs, *_ = np.linalg.lstsq(design[:, 1:], target, rcond=None)
    mat = c0 * basis[0]
    for c, g in zip(coeffs, basis[1:]):
        mat = mat + c * g
    rho = DensityMatrix(mat, (2, 2))
    effects = _flat_effects(scheme)
    probs = np.array([float(np.real(np.trace(rho.entries @ e))) for e in effects])
    ll = _log_likelihood(table.counts.reshape(-1), probs)
    return TomographyResult(
        rho=rho,
        method="linear_inversion",
        physical=rho.positive,
        log_likelihood=ll,
        iterations=0,
        residual=0.0,
    )


def mle_reconstruct(
    table: CountTable, tolerance: float = 1e-9, max_iterations: int = 10_000
) -> TomographyResult:
    """Maximum-likelihood estimate over physical density matrices.

    Diluted R-rho-R fixed point: the full step rho' = R rho R / Tr is taken
    whenever it does not decrease the multinomial log-likelihood; otherwise
    the step operator is diluted towards the identity until it does.  Stops
    when the trace-distance step falls below `tolerance`.  Non-convergence
    is reported in the result, never silently ignored.
    """
    scheme = scheme_by_kind(table.scheme_kind)
    effects = _flat_effects(scheme)
    counts = table.counts.reshape(-1)
    total = float(counts.sum())
    effect_stack = np.stack(effects)

    def probs_of(rho: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("kij,ji->k", effect_stack, rho))

    rho = np.eye(4, dtype=complex) / 4.0
    ll = _log_likelihood(counts, probs_of(rho))
    history = [ll]
    iterations = 0
    residual = math.inf
    converged = False
    for iterations in range(1, max_iterations + 1):
        p = np.clip(probs_of(rho), 1e-12, None)
        r_op = np.einsum("k,kij->ij", counts / p, effect_stack) / total
        accepted = None
        alpha = 1.0
        while alpha >= 1e-6:
            step = (1.0 - alpha) * np.eye(4) + alpha * r_op
            cand = step @ rho @ step.conj().T
            cand = (cand + cand.conj().T) / 2.0
            cand = cand / np.real(np.trace(cand))
            cand_ll = _log_likelihood(counts, probs_of(cand))
            if cand_ll >= ll:
                accepted = (cand, cand_ll)
                break
            alpha /= 2.0
        if accepted is None:
            # every dilution strictly decreases the likelihood, which can
            # only happen once improvements sit below float resolution
            converged = True
            break
        new_rho, new_ll = accepted
        diff_eigs = np.linalg.eigvalsh(new_rho - rho)
        residual = float(0.5 * np.sum(np.abs(diff_eigs)))
        plateau = new_ll == ll
        rho, ll = new_rho, new_ll
        history.append(ll)
        if residual < tolerance or plateau:
            converged = True
            break
    # polish: near the optimum the likelihood gate is float-noise-limited,
    # but the bare fixed-point step keeps contracting; continue while the
    # step size strictly decreases
    extra = 0
    while converged and residual > tolerance and extra < 500:
        p = np.clip(probs_of(rho), 1e-12, None)
        r_op = np.einsum("k,kij->ij", counts / p, effect_stack) / total
        cand = r_op @ rho @ r_op.conj().T
        cand = (cand + cand.conj().T) / 2.0
        cand = cand / np.real(np.trace(cand))
        new_residual = float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(cand - rho))))
        if new_residual >= residual:
            break
        rho, residual = cand, new_residual
        extra += 1
    if extra:
        iterations += extra
        ll = _log_likelihood(counts, probs_of(rho))
    dm = DensityMatrix(rho, (2, 2))
    return TomographyResult(
        rho=dm,
        method="mle",
        physical=dm.positive,
        log_likelihood=ll,
        iterations=iterations,
        residual=residual,
        converged=converged,
        ll_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# entanglement measures and Bell combination
# ---------------------------------------------------------------------------

def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state.

    Computed as max(0, mu_1 - mu_2 - mu_3 - mu_4) over the square roots of
    the eigenvalues of rho (sy x sy) rho* (sy x sy), using the Hermitian
    equivalent sqrt(rho) rho_tilde sqrt(rho).  Eigenvalues below the machine
    noise floor are zeroed because the square root amplifies them.
    """
    if rho.dims != (2, 2):
        raise ValueError("concurrence is defined for qubit pairs")
    if not rho.positive:
        raise ValueError("concurrence requires a physical state")
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    tilde = yy @ rho.entries.conj() @ yy
    eigs, vecs = np.linalg.eigh(rho.entries)
    root = (vecs * np.sqrt(np.clip(eigs, 0.0, None))) @ vecs.conj().T
    herm = root @ tilde @ root
    mus = np.linalg.eigvalsh((herm + herm.conj().T) / 2.0)
    mus = np.where(mus > 16 * np.finfo(float).eps, mus, 0.0)
    mus = np.sort(np.sqrt(mus))[::-1]
    return float(max(0.0, mus[0] - mus[1] - mus[2] - mus[3]))


def witness_value(rho: DensityMatrix, witness: np.ndarray | None = None) -> float:
    """Tr(W rho); negative certifies entanglement for the default witness."""
    if not rho.positive:
        raise ValueError("witness evaluation requires a physical state")
    w = singlet_witness() if witness is None else np.asarray(witness, dtype=complex)
    if w.shape != (4, 4) or np.max(np.abs(w - w.conj().T)) > 1e-10:
        raise ValueError("witness must be a Hermitian 4x4 matrix")
    return float(np.real(np.trace(w @ rho.entries)))


def _analyzer(theta: float) -> np.ndarray:
    """+1/-1 observable of a linear polarization analyzer at angle theta."""
    return math.cos(2 * theta) * PAULI["Z"] + math.sin(2 * theta) * PAULI["X"]


def _correlator(rho: DensityMatrix, theta_1: float, theta_2: float) -> float:
    obs = np.kron(_analyzer(theta_1), _analyzer(theta_2))
    return float(np.real(np.trace(rho.entries @ obs)))


def chsh(rho: DensityMatrix, angles: tuple[float, float, float, float]) -> float:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b') at the given analyzer angles."""
    if not rho.positive:
        raise ValueError("CHSH requires a physical state")
    a, ap, b, bp = angles
    return (
        _correlator(rho, a, b)
        - _correlator(rho, a, bp)
        + _correlator(rho, ap, b)
        + _correlator(rho, ap, bp)
    )


@dataclass(frozen=True)
class ChshResult:
    value: float
    angles: tuple[float, float, float, float]


def _zx_correlation_matrix(rho: DensityMatrix) -> np.ndarray:
    m = np.empty((2, 2))
    for i, pa in enumerate(("Z", "X")):
        for j, pb in enumerate(("Z", "X")):
            m[i, j] = float(np.real(np.trace(rho.entries @ np.kron(PAULI[pa], PAULI[pb]))))
    return m


def chsh_optimize(rho: DensityMatrix, grid: int = 16) -> ChshResult:
    """Maximize S over the four analyzer angles: coarse grid, then refinement."""
    if not rho.positive:
        raise ValueError("CHSH requires a physical state")
    corr = _zx_correlation_matrix(rho)
    thetas = np.arange(grid) * (math.pi / grid)
    u = np.stack([np.cos(2 * thetas), np.sin(2 * thetas)], axis=1)
    table = u @ corr @ u.T  # table[i, j] = E(theta_i, theta_j)
    s_grid = (
        table[:, None, :, None]
        - table[:, None, None, :]
        + table[None, :, :, None]
        + table[None, :, None, :]
    )
    best = np.unravel_index(np.argmax(s_grid), s_grid.shape)
    start = np.array([thetas[k] for k in best])

    def negative_s(x):
        return -chsh(rho, tuple(x))

    result = optimize.minimize(
        negative_s,
        start,
        method="Nelder-Mead",
        options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12},
    )
    angles = tuple(float(t % math.pi) for t in result.x)
    return ChshResult(float(-result.fun), angles)


@dataclass(frozen=True)
class EntanglementReport:
    concurrence: float
    witness: float
    chsh_value: float
    chsh_angles: tuple[float, float, float, float]
    entropy_a: float
    entropy_b: float

    def __post_init__(self):
        if not -1e-9 <= self.concurrence <= 1 + 1e-9:
            raise ValueError("concurrence out of range")
        if self.chsh_value > 2 * math.sqrt(2.0) + 1e-9:
            raise ValueError("CHSH value exceeds the quantum bound")


def entanglement_report(rho: DensityMatrix) -> EntanglementReport:
    best = chsh_optimize(rho)
    return EntanglementReport(
        concurrence=concurrence(rho),
        witness=witness_value(rho),
        chsh_value=best.value,
        chsh_angles=best.angles,
        entropy_a=entropy(partial_trace(rho, 0)),
        entropy_b=entropy(partial_trace(rho, 1)),
    )
