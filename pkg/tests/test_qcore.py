"""Core linear-algebra layer: states, operators, reduced states, entropy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biophot import qcore
from biophot.qcore import (
    DensityMatrix,
    Operator,
    PureState,
    TruncationError,
    annihilation,
    coherent_state,
    creation,
    entropy,
    expectation,
    fidelity,
    fock_state,
    identity_operator,
    number_operator,
    outer,
    partial_trace,
    random_density_matrix,
    random_pure_state,
    random_unitary,
    reduced_density,
    schmidt,
    spectrum_entropy,
    state_fidelity,
    tensor,
    trace_distance,
)

RNG = np.random.default_rng(20240811)


# --- independent oracles -----------------------------------------------------

def oracle_partial_trace(rho: np.ndarray, dims, keep: int) -> np.ndarray:
    """Direct index contraction, written without reshape tricks."""
    da, db = dims
    if keep == 0:
        out = np.zeros((da, da), dtype=complex)
        for i in range(da):
            for j in range(da):
                for k in range(db):
                    out[i, j] += rho[i * db + k, j * db + k]
        return out
    out = np.zeros((db, db), dtype=complex)
    for i in range(db):
        for j in range(db):
            for k in range(da):
                out[i, j] += rho[k * db + i, k * db + j]
    return out


def poisson_tail(mean: float, first_excluded: int) -> float:
    kept = sum(mean**n / math.factorial(n) for n in range(first_excluded))
    return 1.0 - math.exp(-mean) * kept


SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)


# --- coherent states ---------------------------------------------------------

class TestCoherentState:
    def test_vacuum(self):
        state, loss = coherent_state(0.0, 10)
        expected = np.zeros(10)
        expected[0] = 1.0
        assert np.allclose(state.amplitudes, expected)
        assert loss == 0.0

    def test_mean_photon_number_matches_poisson_mean(self):
        state, _ = coherent_state(1.0, 30)
        n_op = number_operator(30)
        mean = expectation(n_op, state).real
        assert mean == pytest.approx(1.0, abs=1e-10)

    def test_small_cutoff_rejected(self):
        # oracle: Poisson tail beyond n=3 at mean 4 is ~0.57, far above 1e-8
        tail = poisson_tail(4.0, 4)
        assert tail > 0.5
        with pytest.raises(TruncationError):
            coherent_state(2.0, 4)
        _, loss = coherent_state(2.0, 4, tail_tol=None)
        assert loss == pytest.approx(tail, abs=1e-12)

    def test_eigenstate_of_annihilation(self):
        state, _ = coherent_state(0.5, 30)
        lowered = annihilation(30).apply(state)
        assert np.max(np.abs(lowered.amplitudes - 0.5 * state.amplitudes)) < 1e-9

    @given(st.floats(0.0, 1.5), st.floats(0.0, 2 * math.pi))
    @settings(max_examples=30, deadline=None)
    def test_normalized_with_poisson_mean(self, mag, phase):
        mu = mag * complex(math.cos(phase), math.sin(phase))
        state, loss = coherent_state(mu, 30)
        assert abs(state.norm() - 1.0) < 1e-12
        assert loss < 1e-8
        mean = expectation(number_operator(30), state).real
        assert mean == pytest.approx(abs(mu) ** 2, abs=1e-8)


# --- ladder operators --------------------------------------------------------

class TestLadderOperators:
    def test_two_level_matrix(self):
        a = annihilation(2)
        assert np.allclose(a.entries, [[0.0, 1.0], [0.0, 0.0]])

    def test_commutator_is_identity_except_top_level(self):
        n = 20
        # oracle: direct matrix arithmetic on an independently built ladder
        lowering = np.zeros((n, n), dtype=complex)
        for k in range(1, n):
            lowering[k - 1, k] = math.sqrt(k)
        comm_oracle = lowering @ lowering.conj().T - lowering.conj().T @ lowering
        a = annihilation(n)
        comm = a.entries @ creation(n).entries - creation(n).entries @ a.entries
        assert np.allclose(comm, comm_oracle, atol=1e-12)
        expected = np.eye(n)
        expected[-1, -1] = -(n - 1)
        assert np.allclose(comm, expected)

    def test_cutoff_precondition(self):
        with pytest.raises(ValueError):
            annihilation(1)


# --- tensor products ---------------------------------------------------------

class TestTensor:
    def test_vacuum_pair_is_first_basis_vector(self):
        pair = tensor(fock_state(0, 3), fock_state(0, 4))
        assert pair.dims == (3, 4)
        expected = np.zeros(12)
        expected[0] = 1.0
        assert np.allclose(pair.amplitudes, expected)

    def test_identity_tensor_identity(self):
        eye = tensor(identity_operator(3), identity_operator(5))
        assert np.allclose(eye.entries, np.eye(15))

    def test_ladder_action_on_fock_pair(self):
        a_on_first = tensor(annihilation(3), identity_operator(3))
        psi = tensor(fock_state(1, 3), fock_state(0, 3))
        lowered = a_on_first.apply(psi)
        expected = tensor(fock_state(0, 3), fock_state(0, 3))
        assert np.allclose(lowered.amplitudes, expected.amplitudes)

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TypeError):
            tensor(fock_state(0, 2), identity_operator(2))


# --- partial trace -----------------------------------------------------------

class TestPartialTrace:
    def test_product_state_returns_factor(self):
        # 100 random product draws per the module contract
        for _ in range(100):
            rho_a = random_density_matrix(3, RNG)
            rho_b = random_density_matrix(4, RNG)
            joint = tensor(rho_a, rho_b)
            assert np.max(np.abs(partial_trace(joint, 0).entries - rho_a.entries)) < 1e-10
            assert np.max(np.abs(partial_trace(joint, 1).entries - rho_b.entries)) < 1e-10

    def test_singlet_reduces_to_maximally_mixed_on_both_sides(self):
        rho = DensityMatrix(np.outer(SINGLET, SINGLET.conj()), (2, 2))
        left = partial_trace(rho, 0)
        right = partial_trace(rho, 1)
        oracle = oracle_partial_trace(rho.entries, (2, 2), 0)
        assert np.allclose(left.entries, oracle, atol=1e-12)
        assert np.allclose(left.entries, np.eye(2) / 2, atol=1e-12)
        assert np.allclose(left.entries, right.entries, atol=1e-12)

    def test_fock_pair_keeps_pure_factor(self):
        psi = tensor(fock_state(1, 3), fock_state(0, 3))
        reduced = reduced_density(psi, 0)
        assert np.allclose(reduced.entries, np.outer([0, 1, 0], [0, 1, 0]))

    def test_reduced_density_matches_partial_trace(self):
        for _ in range(20):
            psi = random_pure_state(12, RNG)
            psi = PureState(psi.amplitudes, (3, 4))
            rho = outer(psi)
            for keep in (0, 1):
                assert np.allclose(
                    reduced_density(psi, keep).entries,
                    partial_trace(rho, keep).entries,
                    atol=1e-12,
                )


# --- Schmidt decomposition ---------------------------------------------------

class TestSchmidt:
    def test_product_state_has_single_weight(self):
        psi = tensor(random_pure_state(3, RNG), random_pure_state(4, RNG))
        dec = schmidt(psi)
        assert dec.weights[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(dec.weights[1:] < 1e-12)

    def test_singlet_weights_are_half_half(self):
        psi = PureState(SINGLET, (2, 2))
        dec = schmidt(psi)
        # oracle: eigenvalues of the directly contracted reduced matrix
        reduced = oracle_partial_trace(np.outer(SINGLET, SINGLET.conj()), (2, 2), 0)
        oracle = np.sort(np.linalg.eigvalsh(reduced))[::-1]
        assert np.allclose(dec.weights, oracle, atol=1e-12)
        assert np.allclose(dec.weights, [0.5, 0.5], atol=1e-12)

    def test_three_fold_correlated_state(self):
        amps = np.zeros(9, dtype=complex)
        amps[[0, 4, 8]] = 1.0 / math.sqrt(3.0)
        dec = schmidt(PureState(amps, (3, 3)))
        assert np.allclose(dec.weights, [1 / 3] * 3, atol=1e-12)

    def test_reconstruction_matches_state(self):
        for _ in range(50):
            psi = PureState(random_pure_state(12, RNG).amplitudes, (3, 4))
            dec = schmidt(psi)
            rebuilt = dec.reconstruct((3, 4))
            # phases are canonicalized pairwise, so the product is exact
            assert np.max(np.abs(rebuilt.amplitudes - psi.amplitudes)) < 1e-9

    def test_weights_equal_reduced_spectrum(self):
        for _ in range(100):
            psi = PureState(random_pure_state(8, RNG).amplitudes, (2, 4))
            dec = schmidt(psi)
            spectrum = np.sort(np.linalg.eigvalsh(reduced_density(psi, 0).entries))[::-1]
            padded = np.zeros_like(spectrum)
            padded[: len(dec.weights)] = dec.weights
            assert np.max(np.abs(padded - spectrum)) < 1e-9


# --- entropy -----------------------------------------------------------------

class TestEntropy:
    def test_pure_state_has_zero_entropy(self):
        for _ in range(10):
            assert entropy(outer(random_pure_state(5, RNG))) == pytest.approx(0.0, abs=1e-10)

    def test_maximally_mixed_qubit(self):
        # oracle: two eigenvalues of 1/2
        oracle = -2 * (0.5 * math.log(0.5))
        rho = DensityMatrix(np.eye(2) / 2, (2,))
        assert entropy(rho) == pytest.approx(oracle, abs=1e-12)
        assert entropy(rho) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_degenerate_schmidt_case_is_zero(self):
        assert spectrum_entropy(np.array([1.0, 0.0])) == 0.0

    def test_rejects_negative_eigenvalues(self):
        m = np.diag([1.1, -0.1]).astype(complex)
        rho = DensityMatrix(m, (2,))
        assert not rho.positive
        with pytest.raises(ValueError):
            entropy(rho)

    def test_unitary_invariance(self):
        for _ in range(100):
            rho = random_density_matrix(4, RNG)
            u = random_unitary(4, RNG)
            rotated = DensityMatrix(u @ rho.entries @ u.conj().T, (4,))
            assert entropy(rotated) == pytest.approx(entropy(rho), abs=1e-9)

    def test_zero_entropy_iff_dominant_schmidt_weight(self):
        product = tensor(random_pure_state(3, RNG), random_pure_state(3, RNG))
        dec = schmidt(product)
        assert dec.weights[0] > 1 - 1e-9
        assert entropy(reduced_density(product, 0)) < 1e-9
        entangled = PureState(SINGLET, (2, 2))
        assert schmidt(entangled).weights[0] < 1 - 1e-9
        assert entropy(reduced_density(entangled, 0)) > 1e-9


# --- fidelity ----------------------------------------------------------------

class TestFidelity:
    def test_identical_states(self):
        rho = random_density_matrix(4, RNG)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_pure_states(self):
        rho = outer(fock_state(0, 4))
        sigma = outer(fock_state(2, 4))
        assert fidelity(rho, sigma) == pytest.approx(0.0, abs=1e-12)

    def test_coherent_overlap(self):
        # oracle: |<mu|nu>|^2 = exp(-|mu - nu|^2)
        a, _ = coherent_state(0.0, 40)
        b, _ = coherent_state(1.0, 40)
        assert fidelity(outer(a), outer(b)) == pytest.approx(math.exp(-1.0), abs=1e-9)
        assert state_fidelity(a, b) == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_pure_inputs_reduce_to_squared_overlap(self):
        for _ in range(20):
            psi = random_pure_state(5, RNG)
            phi = random_pure_state(5, RNG)
            expected = abs(psi.overlap(phi)) ** 2
            assert fidelity(outer(psi), outer(phi)) == pytest.approx(expected, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(random_density_matrix(2, RNG), random_density_matrix(3, RNG))


# --- containers --------------------------------------------------------------

class TestContainers:
    def test_pure_state_dim_consistency(self):
        with pytest.raises(ValueError):
            PureState(np.ones(5), (2, 2))

    def test_normalize_postcondition(self):
        psi = PureState(np.array([3.0, 4.0]), (2,)).normalized()
        assert abs(psi.norm() - 1.0) < 1e-12

    def test_density_matrix_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]), (2,))

    def test_density_matrix_rejects_wrong_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2), (2,))

    def test_trace_distance_of_orthogonal_pure_states(self):
        rho = outer(fock_state(0, 2))
        sigma = outer(fock_state(1, 2))
        assert trace_distance(rho, sigma) == pytest.approx(1.0, abs=1e-12)

    def test_operator_dag(self):
        a = annihilation(4)
        assert np.allclose(a.dag().entries, a.entries.conj().T)
