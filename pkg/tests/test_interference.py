"""Interference engine: unitaries, permanents, distributions, post-selection."""

import itertools

import numpy as np
import pytest

from tritterlab import (
    Interferometer,
    InternalState,
    InputConfiguration,
    ValidationError,
    fourier_unitary,
    matrix_from_pairs,
    matrix_to_pairs,
    output_distribution,
    pair_coincidence_probability,
    permanent,
    postselect_coincidence,
    purity,
    spectral_vectors_from_gram,
    witness_report,
)
from conftest import (
    exact_integer_permanent,
    oracle_coincidence,
    random_internal,
    random_unitary,
)

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)


class TestFourierUnitary:
    def test_two_port_is_balanced_splitter(self):
        u = fourier_unitary(2)
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.abs(u.matrix - expected).max() < 1e-12

    def test_three_port_matches_canonical_phases(self):
        u = fourier_unitary(3)
        w = np.exp(2j * np.pi / 3)
        expected = np.array([[1, 1, 1], [1, w, w**2], [1, w**2, w**4]]) / np.sqrt(3)
        assert np.abs(u.matrix - expected).max() < 1e-12

    def test_single_port_is_identity(self):
        assert np.abs(fourier_unitary(1).matrix - np.array([[1.0]])).max() < 1e-15

    def test_unitarity_up_to_dim_12(self):
        for n in range(1, 13):
            m = fourier_unitary(n).matrix
            assert np.abs(m @ m.conj().T - np.eye(n)).max() < 1e-10

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValidationError):
            fourier_unitary(0)

    def test_interferometer_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            Interferometer(np.array([[1.0, 0.0], [0.0, 2.0]]))


class TestPermanent:
    def test_identity(self):
        assert permanent(np.eye(3)) == pytest.approx(1.0)

    def test_all_ones_2x2(self):
        assert permanent(np.ones((2, 2))) == pytest.approx(2.0)

    def test_tritter_permanent(self, tritter):
        # six-term expansion gives -3 for the bare phase matrix, so -1/sqrt(3) overall
        value = permanent(tritter.matrix)
        assert value == pytest.approx(-1.0 / np.sqrt(3), abs=1e-12)
        naive = sum(
            np.prod([tritter.matrix[i, s[i]] for i in range(3)])
            for s in itertools.permutations(range(3))
        )
        assert value == pytest.approx(naive, abs=1e-12)

    @pytest.mark.parametrize("dim", [1, 2, 3, 4])
    def test_matches_exact_rational_oracle(self, dim):
        rng = np.random.default_rng(100 + dim)
        for _ in range(20):
            re = rng.integers(-5, 6, size=(dim, dim))
            im = rng.integers(-5, 6, size=(dim, dim))
            exact_re, exact_im = exact_integer_permanent(
                [[(int(re[i, j]), int(im[i, j])) for j in range(dim)] for i in range(dim)]
            )
            got = permanent(re + 1j * im)
            assert got.real == pytest.approx(float(exact_re), abs=1e-9)
            assert got.imag == pytest.approx(float(exact_im), abs=1e-9)

    def test_ryser_path_matches_enumeration(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
        naive = sum(
            np.prod([m[i, s[i]] for i in range(7)]) for s in itertools.permutations(range(7))
        )
        assert permanent(m) == pytest.approx(naive, rel=1e-10)

    def test_non_square_rejected(self):
        with pytest.raises(ValidationError):
            permanent(np.ones((2, 3)))

    def test_dimension_bound(self):
        with pytest.raises(ValidationError):
            permanent(np.eye(13))


class TestInputValidation:
    def test_duplicate_ports_rejected(self):
        with pytest.raises(ValidationError):
            InputConfiguration([(1, InternalState(H)), (1, InternalState(V))])

    def test_port_zero_rejected(self):
        with pytest.raises(ValidationError):
            InputConfiguration([(0, InternalState(H))])

    def test_unnormalized_polarisation_rejected(self):
        with pytest.raises(ValidationError):
            InternalState(np.array([1.0, 1.0]))

    def test_unnormalized_spectral_rejected(self):
        with pytest.raises(ValidationError):
            InternalState(H, np.array([0.5, 0.5]))

    def test_mismatched_spectral_dims_rejected(self):
        with pytest.raises(ValidationError):
            InputConfiguration(
                [(1, InternalState(H, [1.0])), (2, InternalState(V, [1.0, 0.0]))]
            )

    def test_port_beyond_interferometer_rejected(self, tritter):
        config = InputConfiguration([(4, InternalState(H))])
        with pytest.raises(ValidationError):
            output_distribution(tritter, config)


class TestOutputDistribution:
    def test_hom_suppression_on_balanced_splitter(self):
        u = fourier_unitary(2)
        config = InputConfiguration([(1, InternalState(H)), (2, InternalState(H))])
        dist = output_distribution(u, config)
        assert dist[(1, 1)] == pytest.approx(0.0, abs=1e-12)
        assert dist[(2, 0)] == pytest.approx(0.5, abs=1e-12)
        assert dist[(0, 2)] == pytest.approx(0.5, abs=1e-12)

    def test_orthogonal_pair_coincidence_on_tritter(self, tritter):
        config = InputConfiguration([(1, InternalState(H)), (2, InternalState(V))])
        dist = output_distribution(tritter, config)
        assert dist[(1, 1, 0)] == pytest.approx(2.0 / 9.0, abs=1e-12)

    def test_three_photon_distribution_normalized(self, tritter):
        from tritterlab.interference import DISTRIBUTION_NORM_TOL

        config = InputConfiguration(
            [(1, InternalState(H)), (2, InternalState(H)), (3, InternalState(V))]
        )
        dist = output_distribution(tritter, config)
        assert len(dist) == 10
        assert sum(dist.values()) == pytest.approx(1.0, abs=DISTRIBUTION_NORM_TOL)

    def test_normalization_over_random_seeds(self):
        # randomized unitaries and internal states, >= 100 seeds
        for seed in range(100):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 4))
            d = int(rng.integers(1, 3))
            p = int(rng.integers(1, n + 1))
            u = Interferometer(random_unitary(n, rng))
            ports = rng.choice(n, size=p, replace=False) + 1
            config = InputConfiguration(
                [(int(port), random_internal(rng, d)) for port in ports]
            )
            dist = output_distribution(u, config)
            assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)

    def test_four_photons_normalized(self):
        rng = np.random.default_rng(424)
        u = Interferometer(random_unitary(4, rng))
        config = InputConfiguration(
            [(port, random_internal(rng)) for port in (1, 2, 3, 4)]
        )
        assert sum(output_distribution(u, config).values()) == pytest.approx(1.0, abs=1e-9)


class TestPostselectCoincidence:
    def test_two_port_singlet(self):
        u = fourier_unitary(2)
        config = InputConfiguration([(1, InternalState(H)), (2, InternalState(V))])
        result = postselect_coincidence(u, config, (1, 1))
        assert result.probability == pytest.approx(0.5, abs=1e-12)
        singlet = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
        assert np.vdot(singlet, result.rho @ singlet).real == pytest.approx(1.0, abs=1e-12)

    def test_w_generation_amplitudes_match_oracle(self, tritter):
        pols = [H, H, V]
        specs = [np.array([1.0 + 0j])] * 3
        result = postselect_coincidence(
            tritter,
            InputConfiguration([(i + 1, InternalState(p)) for i, p in enumerate(pols)]),
            (1, 1, 1),
        )
        amps, rho_oracle, prob_oracle = oracle_coincidence(
            tritter.matrix, (1, 2, 3), pols, specs, (1, 2, 3)
        )
        assert result.probability == pytest.approx(prob_oracle, abs=1e-12)
        assert result.probability == pytest.approx(1.0 / 9.0, abs=1e-12)
        assert np.abs(result.rho - rho_oracle).max() < 1e-12
        # each single-V coincidence amplitude equals -1/(3 sqrt(3))
        expected = -1.0 / (3.0 * np.sqrt(3.0))
        for pattern in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
            assert amps[(pattern, (0, 0, 0))] == pytest.approx(expected, abs=1e-12)

    def test_distinguishable_photons_lose_coherence(self, tritter):
        specs = spectral_vectors_from_gram(np.eye(3))
        config = InputConfiguration(
            [
                (1, InternalState(H, specs[0])),
                (2, InternalState(H, specs[1])),
                (3, InternalState(V, specs[2])),
            ]
        )
        result = postselect_coincidence(tritter, config, (1, 1, 1))
        off_diag = result.rho - np.diag(np.diag(result.rho))
        assert np.abs(off_diag).max() < 1e-10
        # classical limit: sum over assignments of the transmission products
        classical = sum(
            np.prod([np.abs(tritter.matrix[j, s[j]]) ** 2 for j in range(3)])
            for s in itertools.permutations(range(3))
        )
        assert result.probability == pytest.approx(classical, abs=1e-12)
        _, rho_oracle, prob_oracle = oracle_coincidence(
            tritter.matrix, (1, 2, 3), [H, H, V], specs, (1, 2, 3)
        )
        assert np.abs(result.rho - rho_oracle).max() < 1e-12
        assert result.probability == pytest.approx(prob_oracle, abs=1e-12)

    def test_identical_photons_give_separable_state(self, tritter):
        for eta in (0.0, 0.5, 2.0, 0.3 + 0.4j):
            pol = np.array([1.0, eta], dtype=complex)
            pol /= np.linalg.norm(pol)
            config = InputConfiguration([(p, InternalState(pol)) for p in (1, 2, 3)])
            result = postselect_coincidence(tritter, config, (1, 1, 1))
            assert purity(result.rho) == pytest.approx(1.0, abs=1e-10)
            product = np.kron(np.kron(pol, pol), pol)
            overlap = np.vdot(product, result.rho @ product).real
            assert overlap == pytest.approx(1.0, abs=1e-10)
            report = witness_report(result.rho, "w")
            assert not report.w_witness_pass
            assert not report.genuine_tripartite_pass
            assert not report.ghz_class_pass

    def test_probability_consistent_with_distribution(self):
        for seed in range(30):
            rng = np.random.default_rng(1000 + seed)
            n = int(rng.integers(2, 4))
            p = int(rng.integers(1, n + 1))
            u = Interferometer(random_unitary(n, rng))
            ports = rng.choice(n, size=p, replace=False) + 1
            config = InputConfiguration(
                [(int(port), random_internal(rng, 2)) for port in ports]
            )
            outs = sorted(rng.choice(n, size=p, replace=False))
            pattern = tuple(1 if j in outs else 0 for j in range(n))
            dist = output_distribution(u, config)
            result = postselect_coincidence(u, config, pattern)
            assert result.probability == pytest.approx(dist[pattern], abs=1e-10)
            if result.state_defined:
                rho = result.rho
                assert np.abs(rho - rho.conj().T).max() < 1e-10
                assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
                assert np.linalg.eigvalsh(rho).min() > -1e-10

    def test_zero_probability_is_flagged_not_raised(self):
        u = fourier_unitary(2)
        config = InputConfiguration([(1, InternalState(H)), (2, InternalState(H))])
        result = postselect_coincidence(u, config, (1, 1))
        assert result.probability == 0.0
        assert result.rho is None
        assert not result.state_defined

    def test_bunched_pattern_rejected(self, tritter):
        config = InputConfiguration([(1, InternalState(H)), (2, InternalState(V))])
        with pytest.raises(ValidationError, match="bunched"):
            postselect_coincidence(tritter, config, (2, 0, 0))

    def test_wrong_photon_count_rejected(self, tritter):
        config = InputConfiguration([(1, InternalState(H)), (2, InternalState(V))])
        with pytest.raises(ValidationError):
            postselect_coincidence(tritter, config, (1, 1, 1))

    def test_qubit_order_follows_output_ports(self, tritter):
        # photon with V polarisation forced into a known output via distinguishability
        specs = spectral_vectors_from_gram(np.eye(3))
        config = InputConfiguration(
            [
                (1, InternalState(V, specs[0])),
                (2, InternalState(H, specs[1])),
                (3, InternalState(H, specs[2])),
            ]
        )
        result = postselect_coincidence(tritter, config, (1, 1, 1))
        assert result.ports == (1, 2, 3)
        # diagonal weights live only on patterns with exactly one V
        diag = np.real(np.diag(result.rho))
        populated = {i for i, w in enumerate(diag) if w > 1e-12}
        assert populated == {int("100", 2), int("010", 2), int("001", 2)}


class TestPairCoincidence:
    def test_matches_closed_form_on_tritter(self, tritter):
        for x in np.linspace(0.0, 1.0, 11):
            for outs in [(1, 2), (1, 3), (2, 3)]:
                got = pair_coincidence_probability(tritter, (1, 2), outs, x)
                assert got == pytest.approx((2.0 - x**2) / 9.0, abs=1e-12)

    def test_visibility_bound(self, tritter):
        probs = [
            pair_coincidence_probability(tritter, (2, 3), (1, 2), x)
            for x in np.linspace(0, 1, 21)
        ]
        assert min(probs) >= 1.0 / 9.0 - 1e-12
        assert max(probs) <= 2.0 / 9.0 + 1e-12
        vis = (max(probs) - min(probs)) / max(probs)
        assert vis == pytest.approx(0.5, abs=1e-12)

    def test_complex_overlap_uses_magnitude(self, tritter):
        x = 0.6 * np.exp(1j * 0.7)
        got = pair_coincidence_probability(tritter, (1, 3), (2, 3), x)
        assert got == pytest.approx((2.0 - 0.36) / 9.0, abs=1e-12)

    def test_overlap_magnitude_above_one_rejected(self, tritter):
        with pytest.raises(ValidationError, match="overlap"):
            pair_coincidence_probability(tritter, (1, 2), (1, 2), 1.2)

    def test_identical_ports_rejected(self, tritter):
        with pytest.raises(ValidationError):
            pair_coincidence_probability(tritter, (1, 1), (1, 2), 0.5)


class TestSpectralVectors:
    def test_reproduces_random_gram(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            z = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            gram = z @ z.conj().T
            vecs = spectral_vectors_from_gram(gram)
            got = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
            assert np.abs(got - gram).max() < 1e-9

    def test_all_ones_gram_gives_identical_vectors(self):
        vecs = spectral_vectors_from_gram(np.ones((3, 3)))
        for v in vecs[1:]:
            assert abs(np.vdot(vecs[0], v)) == pytest.approx(1.0, abs=1e-12)

    def test_non_psd_rejected(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ValidationError, match="semidefinite"):
            spectral_vectors_from_gram(bad)

    def test_non_unit_diagonal_rejected(self):
        with pytest.raises(ValidationError, match="diagonal"):
            spectral_vectors_from_gram(np.array([[2.0, 0.0], [0.0, 1.0]]))


class TestMatrixSerialization:
    def test_round_trip(self, tritter):
        pairs = matrix_to_pairs(tritter.matrix)
        assert isinstance(pairs[0][0], list) and len(pairs[0][0]) == 2
        back = matrix_from_pairs(pairs)
        assert np.abs(back - tritter.matrix).max() == 0.0

    def test_malformed_payload_rejected(self):
        with pytest.raises(ValidationError):
            matrix_from_pairs([[1.0, 2.0], [3.0]])
