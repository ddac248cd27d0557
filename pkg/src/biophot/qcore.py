"""Dense complex linear algebra for small Hilbert spaces.

States and operators are numpy arrays wrapped in thin immutable containers
that track the subsystem structure (a single Fock cutoff, a pair of cutoffs,
or a qubit pair).  Everything here is a pure function of its inputs; the
single numeric kernel is the Hermitian eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TruncationError",
    "PureState",
    "DensityMatrix",
    "Operator",
    "SchmidtDecomposition",
    "coherent_state",
    "coherent_amplitudes",
    "fock_state",
    "annihilation",
    "creation",
    "number_operator",
    "identity_operator",
    "tensor",
    "outer",
    "expectation",
    "partial_trace",
    "reduced_density",
    "schmidt",
    "entropy",
    "spectrum_entropy",
    "fidelity",
    "state_fidelity",
    "trace_distance",
    "random_pure_state",
    "random_density_matrix",
    "random_unitary",
]

HERM_ATOL = 1e-10
TRACE_ATOL = 1e-10
POSITIVITY_FLOOR = -1e-8
DEFAULT_TAIL_TOL = 1e-8

# eigenvalues above this (tiny negative) floor are treated as zero noise
EIG_CLIP = -1e-12


class TruncationError(ValueError):
    """A Fock cutoff is too small for the requested amplitude."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PureState:
    """Complex amplitude vector over a product of local bases."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid local dimensions {dims}")
        if math.prod(dims) != amps.size:
            raise ValueError(
                f"amplitude vector of length {amps.size} does not match dims {dims}"
            )
        object.__setattr__(self, "amplitudes", _freeze(amps))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.amplitudes / n, self.dims)

    def overlap(self, other: "PureState") -> complex:
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class Operator:
    """Complex square matrix with declared subsystem structure."""

    entries: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        d = math.prod(dims)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "entries", _freeze(m))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.entries.conj().T, self.dims)

    def apply(self, psi: PureState) -> PureState:
        if psi.dims != self.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {psi.dims}")
        return PureState(self.entries @ psi.amplitudes, self.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian unit-trace matrix; `positive` flags physicality.

    Construction enforces hermiticity and unit trace.  Positivity is only
    flagged (via the minimum eigenvalue), because linear-inversion estimates
    legitimately violate it and must say so.
    """

    entries: np.ndarray
    dims: tuple[int, ...]
    min_eigenvalue: float = field(init=False, compare=False, default=0.0)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        d = math.prod(dims)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        herm_dev = float(np.max(np.abs(m - m.conj().T))) if d else 0.0
        if herm_dev > HERM_ATOL:
            raise ValueError(f"matrix is not Hermitian (deviation {herm_dev:.3e})")
        m = (m + m.conj().T) / 2.0
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"trace {tr!r} differs from 1")
        object.__setattr__(self, "entries", _freeze(m))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(
            self, "min_eigenvalue", float(np.linalg.eigvalsh(m)[0])
        )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue >= POSITIVITY_FLOOR


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Biorthogonal expansion of a bipartite pure state.

    `weights` are the squared Schmidt coefficients sorted descending;
    `left_basis`/`right_basis` hold the matching orthonormal vectors as
    columns.
    """

    weights: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        left = np.asarray(self.left_basis, dtype=complex)
        right = np.asarray(self.right_basis, dtype=complex)
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise ValueError("Schmidt weights must sum to 1")
        if np.any(w < -1e-12) or np.any(w > 1.0 + 1e-12):
            raise ValueError("Schmidt weights must lie in [0, 1]")
        if np.any(np.diff(w) > 1e-12):
            raise ValueError("Schmidt weights must be sorted descending")
        for basis in (left, right):
            gram = basis.conj().T @ basis
            if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
                raise ValueError("Schmidt basis is not orthonormal")
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "left_basis", _freeze(left))
        object.__setattr__(self, "right_basis", _freeze(right))

    def reconstruct(self, dims: tuple[int, int]) -> PureState:
        coeff = np.sqrt(np.clip(self.weights, 0.0, None))
        mat = (self.left_basis * coeff) @ self.right_basis.T
        return PureState(mat.reshape(-1), dims)


# ---------------------------------------------------------------------------
# state and operator constructors
# ---------------------------------------------------------------------------

def coherent_amplitudes(mu: complex, cutoff: int) -> np.ndarray:
    """Unnormalized Fock amplitudes c_n = exp(-|mu|^2/2) mu^n / sqrt(n!)."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    amps = np.empty(cutoff, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(mu) ** 2)
    for n in range(1, cutoff):
        amps[n] = amps[n - 1] * mu / math.sqrt(n)
    return amps


def coherent_state(
    mu: complex, cutoff: int, tail_tol: float | None = DEFAULT_TAIL_TOL
) -> tuple[PureState, float]:
    """Truncated coherent state and its truncation-loss diagnostic.

    The loss is 1 minus the squared norm of the untruncated expansion kept
    below `cutoff`, i.e. the Poisson tail mass beyond the cutoff.  When the
    loss exceeds `tail_tol` the cutoff is too small for |mu| and a
    TruncationError is raised; pass tail_tol=None to skip the check.
    """
    amps = coherent_amplitudes(mu, cutoff)
    norm_sq = float(np.sum(np.abs(amps) ** 2))
    loss = max(0.0, 1.0 - norm_sq)
    if tail_tol is not None and loss > tail_tol:
        raise TruncationError(
            f"truncation loss {loss:.3e} exceeds tolerance {tail_tol:.1e} "
            f"for |mu|={abs(mu):.3g} at cutoff {cutoff}"
        )
    state = PureState(amps / math.sqrt(norm_sq), (cutoff,))
    return state, loss


def fock_state(n: int, cutoff: int) -> PureState:
    if not 0 <= n < cutoff:
        raise ValueError(f"occupation {n} outside cutoff {cutoff}")
    amps = np.zeros(cutoff, dtype=complex)
    amps[n] = 1.0
    return PureState(amps, (cutoff,))


def annihilation(cutoff: int) -> Operator:
    """Ladder-down operator with <n-1|a|n> = sqrt(n) on the truncated basis."""
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    return Operator(np.diag(np.sqrt(np.arange(1, cutoff)), k=1), (cutoff,))


def creation(cutoff: int) -> Operator:
    return annihilation(cutoff).dag()


def number_operator(cutoff: int) -> Operator:
    return Operator(np.diag(np.arange(cutoff, dtype=float)), (cutoff,))


def identity_operator(cutoff: int) -> Operator:
    return Operator(np.eye(cutoff), (cutoff,))


def tensor(x, y):
    """Kronecker composite of two states or two operators."""
    if isinstance(x, PureState) and isinstance(y, PureState):
        return PureState(np.kron(x.amplitudes, y.amplitudes), x.dims + y.dims)
    if isinstance(x, Operator) and isinstance(y, Operator):
        return Operator(np.kron(x.entries, y.entries), x.dims + y.dims)
    if isinstance(x, DensityMatrix) and isinstance(y, DensityMatrix):
        return DensityMatrix(np.kron(x.entries, y.entries), x.dims + y.dims)
    raise TypeError(f"cannot tensor {type(x).__name__} with {type(y).__name__}")


def outer(psi: PureState) -> DensityMatrix:
    """|psi><psi| of a normalized pure state."""
    amps = psi.normalized().amplitudes
    return DensityMatrix(np.outer(amps, amps.conj()), psi.dims)


def expectation(op: Operator, state) -> complex:
    if isinstance(state, PureState):
        if state.dims != op.dims:
            raise ValueError("dimension mismatch")
        return complex(np.vdot(state.amplitudes, op.entries @ state.amplitudes))
    if isinstance(state, DensityMatrix):
        if state.dims != op.dims:
            raise ValueError("dimension mismatch")
        return complex(np.trace(op.entries @ state.entries))
    raise TypeError(f"cannot take expectation on {type(state).__name__}")


# ---------------------------------------------------------------------------
# reduced states, Schmidt form, entropy, fidelity
# ---------------------------------------------------------------------------

def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of one subsystem of a bipartite density matrix."""
    if len(rho.dims) != 2:
        raise ValueError(f"expected exactly two subsystems, got dims {rho.dims}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 or 1")
    da, db = rho.dims
    r = rho.entries.reshape(da, db, da, db)
    if keep == 0:
        reduced = np.einsum("ajbj->ab", r)
        return DensityMatrix(reduced, (da,))
    reduced = np.einsum("jajb->ab", r)
    return DensityMatrix(reduced, (db,))


def reduced_density(psi: PureState, keep: int) -> DensityMatrix:
    """Reduced state of a bipartite pure state, without forming |psi><psi|."""
    if len(psi.dims) != 2:
        raise ValueError(f"expected exactly two subsystems, got dims {psi.dims}")
    mat = psi.normalized().amplitudes.reshape(psi.dims)
    if keep == 0:
        return DensityMatrix(mat @ mat.conj().T, (psi.dims[0],))
    if keep == 1:
        return DensityMatrix(mat.T @ mat.conj(), (psi.dims[1],))
    raise ValueError("keep must be 0 or 1")


def _canonical_phase(vec: np.ndarray) -> complex:
    for x in vec:
        if abs(x) > 1e-12:
            return x / abs(x)
    return 1.0 + 0.0j


def schmidt(psi: PureState) -> SchmidtDecomposition:
    """Schmidt (biorthogonal) decomposition of a bipartite pure state.

    Degenerate weights are ordered deterministically: each vector pair is
    phase-canonicalized on the first significant left component, then tied
    groups are sorted lexicographically on the left vector.
    """
    if len(psi.dims) != 2:
        raise ValueError(f"expected exactly two subsystems, got dims {psi.dims}")
    state = psi.normalized()
    mat = state.amplitudes.reshape(state.dims)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    weights = s**2
    left = u.copy()
    right = vh.T.copy()  # columns are the right Schmidt vectors
    for i in range(len(s)):
        phase = _canonical_phase(left[:, i])
        left[:, i] = left[:, i] * np.conj(phase)
        right[:, i] = right[:, i] * phase
    # stable ordering inside degenerate weight groups
    order = list(range(len(s)))
    key = [
        (round(-weights[i], 12),) + tuple(
            np.round(np.concatenate([left[:, i].real, left[:, i].imag]), 12)
        )
        for i in order
    ]
    order = [i for _, i in sorted(zip(key, order))]
    weights = weights / weights.sum()
    return SchmidtDecomposition(weights[order], left[:, order], right[:, order])


def spectrum_entropy(values: np.ndarray) -> float:
    """Shannon entropy -sum(p ln p) of a spectrum, in nats; 0 ln 0 := 0."""
    v = np.real(np.asarray(values, dtype=float))
    if v.size and float(v.min()) < EIG_CLIP:
        raise ValueError(f"negative spectrum value {v.min():.3e}")
    pos = v[v > 0.0]
    return float(max(0.0, -np.sum(pos * np.log(pos))))


def entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy in nats.  Rejects non-positive input."""
    if not rho.positive:
        raise ValueError(
            f"non-physical state: minimum eigenvalue {rho.min_eigenvalue:.3e}"
        )
    eigs = np.clip(np.linalg.eigvalsh(rho.entries), 0.0, None)
    return spectrum_entropy(eigs)


def _noise_clipped_eigs(mat: np.ndarray) -> np.ndarray:
    """Eigenvalues of a PSD matrix with sub-machine-noise values zeroed.

    Square roots amplify eigenvalue noise (sqrt(1e-17) ~ 3e-9), so values
    below dim * eps * lambda_max are treated as exact zeros.
    """
    eigs = np.linalg.eigvalsh(mat)
    floor = mat.shape[0] * np.finfo(float).eps * max(float(eigs[-1]), 0.0)
    return np.where(eigs > floor, eigs, 0.0)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    eigs, vecs = np.linalg.eigh(mat)
    floor = mat.shape[0] * np.finfo(float).eps * max(float(eigs[-1]), 0.0)
    eigs = np.where(eigs > floor, eigs, 0.0)
    return (vecs * np.sqrt(eigs)) @ vecs.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    For pure inputs this is the squared overlap |<psi|phi>|^2.
    """
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch {rho.dims} vs {sigma.dims}")
    for m in (rho, sigma):
        if not m.positive:
            raise ValueError("fidelity requires physical (positive) states")
    root = _psd_sqrt(rho.entries)
    middle = root @ sigma.entries @ root
    eigs = _noise_clipped_eigs(middle)
    value = float(np.sum(np.sqrt(eigs)) ** 2)
    return min(1.0, max(0.0, value))


def state_fidelity(psi: PureState, phi: PureState) -> float:
    """|<psi|phi>|^2 for normalized pure states."""
    return min(1.0, abs(psi.normalized().overlap(phi.normalized())) ** 2)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    diff = rho.entries - sigma.entries
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


# ---------------------------------------------------------------------------
# random ensembles (testing and scans)
# ---------------------------------------------------------------------------

def random_pure_state(dim: int, rng: np.random.Generator) -> PureState:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(vec, (dim,)).normalized()


def random_density_matrix(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Hilbert-Schmidt random state: G G^dag / Tr."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m), (dim,))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
