"""Tomography schemes, reconstruction, and entanglement measures."""

import math

import numpy as np
import pytest

from biophot.clicks import DetectorModel
from biophot.qcore import DensityMatrix, fidelity, random_density_matrix, random_unitary, trace_distance
from biophot.tomo import (
    CHSH_CANONICAL_ANGLES,
    CountTable,
    PAULI,
    born_probabilities,
    chsh,
    chsh_optimize,
    concurrence,
    entanglement_report,
    exact_count_table,
    linear_inversion,
    mle_reconstruct,
    product_state,
    scheme_by_kind,
    scheme_mub,
    scheme_sic,
    simulate_tomography,
    singlet_state,
    werner_state,
    white_noise_fraction,
    witness_value,
)

RNG = np.random.default_rng(424242)


def random_two_qubit_state(rng) -> DensityMatrix:
    rho = random_density_matrix(4, rng)
    return DensityMatrix(rho.entries, (2, 2))


def bloch_vector(effect: np.ndarray) -> np.ndarray:
    # effect = |psi><psi| / 2 for the tetrahedral POVM
    proj = 2.0 * effect
    return np.array([float(np.real(np.trace(proj @ PAULI[p]))) for p in "XYZ"])


class TestSchemes:
    def test_mub_cell_counts(self):
        scheme = scheme_mub()
        assert scheme.n_settings == 9
        assert scheme.n_cells == 36

    def test_sic_cell_counts(self):
        scheme = scheme_sic()
        assert scheme.n_settings == 1
        assert scheme.n_cells == 16

    def test_completeness_per_setting(self):
        for scheme in (scheme_mub(), scheme_sic()):
            for arm in scheme.arm_settings:
                total = sum(arm.effects)
                assert np.max(np.abs(total - np.eye(2))) < 1e-12

    def test_effects_positive(self):
        for scheme in (scheme_mub(), scheme_sic()):
            for arm in scheme.arm_settings:
                for effect in arm.effects:
                    assert np.linalg.eigvalsh(effect).min() > -1e-14

    def test_mub_pairwise_unbiased(self):
        arms = scheme_mub().arm_settings
        for i in range(3):
            for j in range(i + 1, 3):
                for ea in arms[i].effects:
                    for eb in arms[j].effects:
                        # rank-1 projectors: |<e|f>|^2 = Tr(Pe Pf)
                        overlap = float(np.real(np.trace(ea @ eb)))
                        assert overlap == pytest.approx(0.5, abs=1e-12)

    def test_sic_symmetric_overlaps(self):
        effects = scheme_sic().arm_settings[0].effects
        for i in range(4):
            for j in range(i + 1, 4):
                overlap = float(np.real(np.trace((2 * effects[i]) @ (2 * effects[j]))))
                assert overlap == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_sic_bloch_tetrahedron(self):
        # oracle: |<psi_k|psi_l>|^2 = 1/3 forces pairwise Bloch dots of -1/3
        effects = scheme_sic().arm_settings[0].effects
        vectors = [bloch_vector(e) for e in effects]
        for v in vectors:
            assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        for i in range(4):
            for j in range(i + 1, 4):
                assert float(vectors[i] @ vectors[j]) == pytest.approx(-1 / 3, abs=1e-12)
        assert np.allclose(vectors[0], [0.0, 0.0, 1.0], atol=1e-12)


class TestBornProbabilities:
    def test_maximally_mixed_is_uniform(self):
        mixed = DensityMatrix(np.eye(4) / 4.0, (2, 2))
        mub = born_probabilities(mixed, scheme_mub())
        assert np.allclose(mub.probs, 0.25, atol=1e-12)
        sic = born_probabilities(mixed, scheme_sic())
        assert np.allclose(sic.probs, 1.0 / 16.0, atol=1e-12)

    def test_singlet_anticorrelated_in_every_pauli_basis(self):
        # oracle: direct 4x4 traces with projectors built here
        probs = born_probabilities(singlet_state(), scheme_mub())
        same_pauli = {"HV|HV": ("H|H", "V|V"), "DA|DA": ("D|D", "A|A"), "RL|RL": ("R|R", "L|L")}
        for setting, outcomes in same_pauli.items():
            i = probs.setting_labels.index(setting)
            for outcome in outcomes:
                j = probs.outcome_labels[i].index(outcome)
                assert probs.probs[i, j] == pytest.approx(0.0, abs=1e-12)

    def test_product_state_factorizes(self):
        rho_a = random_density_matrix(2, RNG)
        rho_b = random_density_matrix(2, RNG)
        joint = DensityMatrix(np.kron(rho_a.entries, rho_b.entries), (2, 2))
        probs = born_probabilities(joint, scheme_mub())
        arm = scheme_mub().arm_settings
        for i, sa in enumerate(arm):
            for j, sb in enumerate(arm):
                row = probs.probs[3 * i + j]
                for k, ea in enumerate(sa.effects):
                    for l, eb in enumerate(sb.effects):
                        pa = float(np.real(np.trace(rho_a.entries @ ea)))
                        pb = float(np.real(np.trace(rho_b.entries @ eb)))
                        assert row[2 * k + l] == pytest.approx(pa * pb, abs=1e-12)


class TestSimulateTomography:
    def test_counts_sum_to_shots(self):
        table = simulate_tomography(singlet_state(), scheme_mub(), shots=313, seed=1)
        assert np.all(table.counts.sum(axis=1) == 313)

    def test_pure_noise_is_uniform(self):
        shots = 40_000
        table = simulate_tomography(
            singlet_state(), scheme_sic(), shots=shots, noise_fraction=1.0, seed=2
        )
        expected = shots / 16.0
        sigma = math.sqrt(shots * (1 / 16) * (15 / 16))
        assert np.max(np.abs(table.counts - expected)) < 4 * sigma

    def test_noiseless_singlet_keeps_structural_zeros(self):
        table = simulate_tomography(singlet_state(), scheme_mub(), shots=10**6, seed=3)
        i = table.setting_labels.index("HV|HV")
        jh = table.outcome_labels[i].index("H|H")
        jv = table.outcome_labels[i].index("V|V")
        assert table.counts[i, jh] == 0
        assert table.counts[i, jv] == 0

    def test_json_round_trip(self):
        table = simulate_tomography(werner_state(0.7), scheme_mub(), shots=512, seed=4)
        back = CountTable.from_json(table.to_json())
        assert back.scheme_kind == table.scheme_kind
        assert back.shots_per_setting == table.shots_per_setting
        assert np.array_equal(back.counts, table.counts)


class TestLinearInversion:
    def test_round_trip_identity(self):
        for kind in ("mub", "sic"):
            scheme = scheme_by_kind(kind)
            for _ in range(50):
                rho = random_two_qubit_state(RNG)
                table = exact_count_table(rho, scheme)
                result = linear_inversion(table)
                assert trace_distance(result.rho, rho) < 1e-9

    def test_exact_singlet_recovers_full_concurrence(self):
        for kind in ("mub", "sic"):
            table = exact_count_table(singlet_state(), scheme_by_kind(kind))
            result = linear_inversion(table)
            assert concurrence(result.rho) == pytest.approx(1.0, abs=1e-9)

    def test_noisy_table_flagged_and_repaired_by_mle(self):
        table = simulate_tomography(singlet_state(), scheme_mub(), shots=40, seed=11)
        lin = linear_inversion(table)
        assert not lin.physical  # small-sample estimate pokes outside the state space
        mle = mle_reconstruct(table)
        assert mle.physical
        assert mle.rho.min_eigenvalue >= -1e-10


class TestMle:
    def test_exact_table_matches_linear_inversion(self):
        # conditioned inputs: the fixed-point contraction degrades near the
        # state-space boundary, so keep the smallest eigenvalue away from 0
        rng = np.random.default_rng(8080)
        for _ in range(5):
            raw = random_two_qubit_state(rng)
            rho = DensityMatrix(0.9 * raw.entries + 0.1 * np.eye(4) / 4.0, (2, 2))
            table = exact_count_table(rho, scheme_mub(), shots=1.0)
            lin = linear_inversion(table)
            mle = mle_reconstruct(table, tolerance=1e-10)
            assert mle.converged
            assert trace_distance(mle.rho, lin.rho) < 1e-7

    def test_log_likelihood_never_decreases(self):
        table = simulate_tomography(werner_state(0.85), scheme_mub(), shots=2_000, seed=21)
        result = mle_reconstruct(table)
        diffs = np.diff(np.array(result.ll_history))
        assert np.all(diffs >= 0.0)

    def test_zero_count_cells_do_not_blow_up(self):
        table = simulate_tomography(singlet_state(), scheme_mub(), shots=500, seed=22)
        assert np.any(table.counts == 0)
        result = mle_reconstruct(table)
        assert np.isfinite(result.log_likelihood)
        assert result.physical

    def test_finite_sample_singlet_quality(self):
        table = simulate_tomography(
            singlet_state(), scheme_mub(), shots=10_000, noise_fraction=0.02, seed=23
        )
        result = mle_reconstruct(table)
        assert fidelity(result.rho, singlet_state()) > 0.97
        assert concurrence(result.rho) > 0.9

    def test_estimates_sharpen_with_shots(self):
        truth = singlet_state()
        scheme = scheme_mub()
        mean_errors = []
        for shots in (100, 1_000, 10_000, 100_000):
            errors = []
            for rep in range(20):
                table = simulate_tomography(
                    truth, scheme, shots=shots, noise_fraction=0.0,
                    seed=1000 * shots + rep,
                )
                result = mle_reconstruct(table, tolerance=1e-8)
                errors.append(trace_distance(result.rho, truth))
            mean_errors.append(float(np.mean(errors)))
        assert mean_errors[0] > mean_errors[1] > mean_errors[2] > mean_errors[3]


class TestConcurrence:
    def test_product_states_unentangled(self):
        for _ in range(20):
            va = RNG.normal(size=3)
            vb = RNG.normal(size=3)
            va /= max(1.0, np.linalg.norm(va))
            vb /= max(1.0, np.linalg.norm(vb))
            rho = product_state(va, vb)
            assert concurrence(rho) < 1e-9

    def test_singlet_is_maximal(self):
        # oracle: direct eigenvalue computation of rho rho_tilde
        rho = singlet_state()
        yy = np.kron(PAULI["Y"], PAULI["Y"])
        eigs = np.sort(np.sqrt(np.clip(np.real(
            np.linalg.eigvals(rho.entries @ yy @ rho.entries.conj() @ yy)
        ), 0, None)))[::-1]
        assert eigs[0] - eigs[1:].sum() == pytest.approx(1.0, abs=1e-12)
        assert concurrence(rho) == pytest.approx(1.0, abs=1e-12)

    def test_werner_closed_form(self):
        # oracle: C(w) = max(0, (3w - 1)/2)
        for w in (0.0, 1 / 3, 0.5, 0.8, 1.0):
            expected = max(0.0, (3 * w - 1) / 2)
            assert concurrence(werner_state(w)) == pytest.approx(expected, abs=1e-10)

    def test_local_unitary_invariance(self):
        for _ in range(100):
            rho = random_two_qubit_state(RNG)
            u = np.kron(random_unitary(2, RNG), random_unitary(2, RNG))
            rotated = DensityMatrix(u @ rho.entries @ u.conj().T, (2, 2))
            assert concurrence(rotated) == pytest.approx(concurrence(rho), abs=1e-9)


class TestWitness:
    def test_singlet_value(self):
        assert witness_value(singlet_state()) == pytest.approx(-0.5, abs=1e-12)

    def test_maximally_mixed_value(self):
        mixed = DensityMatrix(np.eye(4) / 4.0, (2, 2))
        assert witness_value(mixed) == pytest.approx(0.25, abs=1e-12)

    def test_nonnegative_on_product_grid(self):
        angles = np.linspace(0.0, math.pi, 7)
        azims = np.linspace(0.0, 2 * math.pi, 7)
        values = []
        for ta in angles:
            for pa in azims:
                for tb in angles:
                    for pb in azims:
                        va = [math.sin(ta) * math.cos(pa), math.sin(ta) * math.sin(pa), math.cos(ta)]
                        vb = [math.sin(tb) * math.cos(pb), math.sin(tb) * math.sin(pb), math.cos(tb)]
                        values.append(witness_value(product_state(va, vb)))
        assert min(values) >= -1e-10
        assert min(values) == pytest.approx(0.0, abs=1e-6)

    def test_rejects_non_hermitian_witness(self):
        with pytest.raises(ValueError):
            witness_value(singlet_state(), witness=np.triu(np.ones((4, 4))))


class TestChsh:
    def test_singlet_correlator_closed_form(self):
        # oracle: E(t1, t2) = -cos 2(t1 - t2) for the singlet
        rho = singlet_state()
        for t1 in np.linspace(0.0, math.pi, 9):
            for t2 in np.linspace(0.0, math.pi, 9):
                s = chsh(rho, (t1, t1, t2, t2))  # 2 E(t1,t2) + E - E cancels pairs
                expected = 2.0 * (-math.cos(2 * (t1 - t2)))
                assert s == pytest.approx(expected, abs=1e-12)

    def test_singlet_reaches_quantum_bound_at_canonical_angles(self):
        value = chsh(singlet_state(), CHSH_CANONICAL_ANGLES)
        assert abs(value) == pytest.approx(2 * math.sqrt(2.0), abs=1e-9)

    def test_maximally_mixed_is_flat_zero(self):
        mixed = DensityMatrix(np.eye(4) / 4.0, (2, 2))
        rng = np.random.default_rng(5)
        for _ in range(10):
            angles = tuple(rng.uniform(0, math.pi, size=4))
            assert chsh(mixed, angles) == pytest.approx(0.0, abs=1e-12)

    def test_optimizer_reaches_singlet_bound(self):
        result = chsh_optimize(singlet_state())
        assert result.value == pytest.approx(2 * math.sqrt(2.0), abs=1e-9)
        assert abs(chsh(singlet_state(), result.angles)) == pytest.approx(
            result.value, abs=1e-9
        )

    def test_product_states_respect_classical_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            va = rng.normal(size=3)
            vb = rng.normal(size=3)
            va /= max(1.0, float(np.linalg.norm(va)))
            vb /= max(1.0, float(np.linalg.norm(vb)))
            result = chsh_optimize(product_state(va, vb))
            assert result.value <= 2.0 + 1e-6

    def test_werner_threshold(self):
        # oracle: optimized S = 2 sqrt(2) w, exceeding 2 exactly when w > 1/sqrt(2)
        for w in (0.1, 0.3, 0.5, 0.65, 0.70, 0.72, 0.8, 0.9, 1.0):
            result = chsh_optimize(werner_state(w))
            expected = 2.0 * math.sqrt(2.0) * w
            assert result.value == pytest.approx(expected, abs=1e-6)
            assert (result.value > 2.0) == (w > 1.0 / math.sqrt(2.0))


class TestReportAndBridge:
    def test_entanglement_report_on_singlet(self):
        report = entanglement_report(singlet_state())
        assert report.concurrence == pytest.approx(1.0, abs=1e-9)
        assert report.witness == pytest.approx(-0.5, abs=1e-9)
        assert report.chsh_value == pytest.approx(2 * math.sqrt(2.0), abs=1e-8)
        assert report.entropy_a == pytest.approx(math.log(2.0), abs=1e-9)
        assert report.entropy_b == pytest.approx(math.log(2.0), abs=1e-9)

    def test_noise_fraction_limits(self):
        perfect = DetectorModel(efficiency=1.0, dark_rate=0.0)
        tiny = white_noise_fraction(1000.0, perfect, window=1e-9)
        assert tiny == pytest.approx(1000.0 * 1e-9, rel=1e-3)
        blind = DetectorModel(efficiency=0.0, dark_rate=50.0)
        assert white_noise_fraction(1000.0, blind, window=1e-3) == 1.0

    def test_noise_fraction_grows_with_darks(self):
        quiet = DetectorModel(efficiency=0.6, dark_rate=10.0)
        loud = DetectorModel(efficiency=0.6, dark_rate=10_000.0)
        f_quiet = white_noise_fraction(500.0, quiet, window=1e-6)
        f_loud = white_noise_fraction(500.0, loud, window=1e-6)
        assert 0.0 < f_quiet < f_loud < 1.0
