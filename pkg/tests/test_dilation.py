import numpy as np
import pytest

from opkernel import (
    DiscretePOVM,
    ValidationError,
    contraction_kernel,
    gram_quadratic,
    is_positive_definite,
    naimark_dilate,
    povm_compress,
    power_dilation,
    telescoping_quadratic,
)
from tests.conftest import (
    complex_randn,
    diagonal_qubit_povm,
    random_contraction,
    random_povm,
)


class TestContractionKernel:
    def test_zero_operator(self):
        k = contraction_kernel(np.zeros((2, 2)), 2)
        assert np.array_equal(k.block(0, 0), np.eye(2))
        assert np.array_equal(k.block(0, 1), np.zeros((2, 2)))

    def test_scalar_half(self):
        k = contraction_kernel(np.array([[0.5]]), 2)
        expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
        for i in range(3):
            for j in range(3):
                assert k.block(i, j)[0, 0] == pytest.approx(expected[i, j])

    def test_nilpotent_powers(self):
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        k = contraction_kernel(a, 2)
        assert np.array_equal(k.block(0, 1), a)
        assert np.array_equal(k.block(1, 0), a.conj().T)
        assert np.array_equal(k.block(0, 2), np.zeros((2, 2)))

    def test_rejects_expansion(self):
        with pytest.raises(ValidationError, match="spectral norm"):
            contraction_kernel(1.5 * np.eye(2), 2)

    def test_rejects_bad_window(self):
        with pytest.raises(ValidationError, match="window"):
            contraction_kernel(np.eye(2), 0)

    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_power_kernel_is_positive_definite(self, seed, d):
        rng = np.random.default_rng(seed)
        a = random_contraction(rng, d)
        window = int(rng.integers(2, 9))
        assert is_positive_definite(contraction_kernel(a, window)).is_pd


class TestTelescopingQuadratic:
    def test_single_vector(self, rng):
        h = complex_randn(rng, 3)
        a = random_contraction(rng, 3)
        assert telescoping_quadratic(a, [h]) == pytest.approx(np.vdot(h, h).real)

    def test_zero_operator_gives_sum_of_norms(self, rng):
        hs = [complex_randn(rng, 2) for _ in range(4)]
        expected = sum(np.vdot(h, h).real for h in hs)
        assert telescoping_quadratic(np.zeros((2, 2)), hs) == pytest.approx(expected)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_gram_quadratic(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        a = random_contraction(rng, d)
        hs = [complex_randn(rng, d) for _ in range(n)]
        tele = telescoping_quadratic(a, hs)
        direct = gram_quadratic(a, hs)
        scale = sum(np.vdot(h, h).real for h in hs)
        assert abs(tele - direct) <= 1e-10 * scale
        assert tele >= -1e-10 * scale

    @pytest.mark.parametrize("seed", range(3))
    def test_lower_bound_structure(self, seed):
        rng = np.random.default_rng(seed)
        d = 2
        a = random_contraction(rng, d)
        hs = [complex_randn(rng, d) for _ in range(4)]
        norm_a = np.linalg.norm(a, 2)
        tails = []
        tail = np.zeros(d, dtype=complex)
        for h in reversed(hs):
            tail = h + a @ tail
            tails.append(tail)
        tails.reverse()
        bound = np.vdot(tails[0], tails[0]).real + (1 - norm_a**2) * sum(
            np.vdot(t, t).real for t in tails[1:]
        )
        assert telescoping_quadratic(a, hs) >= bound - 1e-10

    def test_rejects_mixed_dimensions(self, rng):
        a = random_contraction(rng, 2)
        with pytest.raises(ValidationError, match="dimension"):
            telescoping_quadratic(a, [complex_randn(rng, 2), complex_randn(rng, 3)])

    def test_rejects_empty(self, rng):
        with pytest.raises(ValidationError, match="at least one"):
            telescoping_quadratic(random_contraction(rng, 2), [])


class TestPowerDilation:
    def test_scalar_half(self):
        dil = power_dilation(np.array([[0.5]]), 8)
        assert dil.max_power >= 4
        for n in range(1, dil.max_power + 1):
            assert dil.power_residuals[n - 1] <= 1e-8

    def test_identity_operator(self):
        dil = power_dilation(np.eye(2), 6)
        assert dil.max_power == 6
        assert all(r <= 1e-10 for r in dil.power_residuals)

    def test_unitary_rotation_needs_no_enlargement(self):
        theta = 0.7
        a = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]],
            dtype=complex,
        )
        dil = power_dilation(a, 8)
        assert dil.fact.rank == 2
        a_pow = np.eye(2, dtype=complex)
        u_pow = np.eye(2, dtype=complex)
        v = dil.embedding
        for _ in range(8):
            a_pow = a_pow @ a
            u_pow = u_pow @ dil.shift
            assert np.linalg.norm(a_pow - v.conj().T @ u_pow @ v) <= 1e-9

    def test_nilpotent(self):
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        dil = power_dilation(a, 6)
        assert dil.max_power >= 3
        for n in range(1, dil.max_power + 1):
            assert dil.power_residuals[n - 1] <= 1e-8
        v = dil.embedding
        u2 = dil.shift @ dil.shift
        assert np.linalg.norm(v.conj().T @ u2 @ v) <= 1e-8

    @pytest.mark.parametrize("seed", range(3))
    def test_random_contraction_certifies_half_window(self, seed):
        rng = np.random.default_rng(seed)
        a = random_contraction(rng, 3)
        dil = power_dilation(a, 8)
        assert dil.max_power >= 4

    def test_shift_is_exact_on_generator_span(self, rng):
        a = random_contraction(rng, 2)
        window = 6
        dil = power_dilation(a, window)
        coeffs = [complex_randn(rng, 2) for _ in range(window)]
        x = sum(dil.fact.factors[m] @ c for m, c in enumerate(coeffs))
        x_shifted = sum(dil.fact.factors[m + 1] @ c for m, c in enumerate(coeffs))
        scale = max(1.0, float(np.linalg.norm(x)))
        assert np.linalg.norm(dil.shift @ x - x_shifted) <= 1e-8 * scale

    def test_polar_variant_keeps_certified_action(self, rng):
        a = random_contraction(rng, 2)
        dil = power_dilation(a, 6, polar=True)
        u = dil.shift
        assert np.linalg.norm(u.conj().T @ u - np.eye(dil.fact.rank)) <= 1e-10
        assert dil.max_power >= 3

    def test_rejects_non_contraction(self):
        with pytest.raises(ValidationError, match="contraction"):
            power_dilation(2 * np.eye(2), 4)

    def test_rejects_short_window(self):
        with pytest.raises(ValidationError, match="window"):
            power_dilation(np.eye(2), 1)


class TestDiscretePOVM:
    def test_valid_construction(self):
        povm = diagonal_qubit_povm()
        assert povm.dim == 2
        assert povm.atoms == ("1", "2")

    def test_rejects_incomplete(self):
        with pytest.raises(ValidationError, match="identity"):
            DiscretePOVM(["a", "b"], [0.45 * np.eye(2), 0.45 * np.eye(2)])

    def test_rejects_negative_effect(self):
        with pytest.raises(ValidationError, match="positive semidefinite"):
            DiscretePOVM(["a", "b"], [np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])])

    def test_rejects_non_hermitian_effect(self):
        q = np.array([[0.5, 0.3], [0.0, 0.5]])
        with pytest.raises(ValidationError, match="Hermitian"):
            DiscretePOVM(["a", "b"], [q, np.eye(2) - q])

    def test_rejects_count_mismatch(self):
        with pytest.raises(ValidationError, match="effects"):
            DiscretePOVM(["a", "b"], [np.eye(2)])


class TestNaimarkDilation:
    def test_single_atom_identity(self):
        povm = DiscretePOVM(["all"], [np.eye(3)])
        dil = naimark_dilate(povm)
        assert dil.fact.rank == 3
        v = dil.embedding
        assert np.linalg.norm(v.conj().T @ v - np.eye(3)) <= 1e-12
        assert np.linalg.norm(v @ v.conj().T - np.eye(3)) <= 1e-12
        assert np.array_equal(dil.projections[0], np.eye(3))

    def test_diagonal_qubit_povm(self):
        dil = naimark_dilate(diagonal_qubit_povm())
        assert dil.fact.rank == 4
        assert dil.isometry_defect <= 1e-10
        assert max(dil.compression_errors) <= 1e-10
        assert np.linalg.norm(sum(dil.projections) - np.eye(4)) <= 1e-10
        # oracle: each effect equals B* B for B its PSD square root
        for j, q in enumerate(dil.povm.effects):
            root = np.sqrt(np.diag(q).real)
            oracle = np.diag(root).conj().T @ np.diag(root)
            assert np.allclose(povm_compress(dil, [dil.povm.atoms[j]]), oracle, atol=1e-10)

    @pytest.mark.parametrize("p", [2, 3, 4])
    def test_uniform_povm(self, p):
        d = 2
        povm = DiscretePOVM([f"u{j}" for j in range(p)], [np.eye(d) / p] * p)
        dil = naimark_dilate(povm)
        for atom in povm.atoms:
            got = povm_compress(dil, [atom])
            assert np.abs(got - np.eye(d) / p).max() <= 1e-10

    @pytest.mark.parametrize("seed", range(4))
    def test_random_povm_invariants(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        p = int(rng.integers(1, 5))
        dil = naimark_dilate(random_povm(rng, d, p))
        r = dil.fact.rank
        assert dil.isometry_defect <= 1e-10
        assert dil.projection_defect <= 1e-10
        assert dil.projection_sum_defect <= 1e-10
        for pi in dil.projections:
            for pj in dil.projections:
                if pi is not pj:
                    assert np.abs(pi @ pj).max() <= 1e-10
        assert max(dil.compression_errors) <= 1e-10
        assert r <= d * p

    def test_projections_act_as_atom_selectors(self, rng):
        # P_j fixes factor images of atom j and kills those of other atoms
        dil = naimark_dilate(random_povm(rng, 2, 3))
        for j, pj in enumerate(dil.projections):
            for k, vk in enumerate(dil.fact.factors):
                image = pj @ vk
                expected = vk if k == j else np.zeros_like(vk)
                assert np.abs(image - expected).max() <= 1e-12


class TestPovmCompress:
    def test_empty_subset(self):
        dil = naimark_dilate(diagonal_qubit_povm())
        assert np.array_equal(povm_compress(dil, []), np.zeros((2, 2)))

    def test_full_set_gives_identity(self):
        dil = naimark_dilate(diagonal_qubit_povm())
        assert np.abs(povm_compress(dil, ["1", "2"]) - np.eye(2)).max() <= 1e-10

    def test_singletons_reproduce_effects(self, rng):
        povm = random_povm(rng, 3, 3)
        dil = naimark_dilate(povm)
        for j, atom in enumerate(povm.atoms):
            assert np.abs(povm_compress(dil, [atom]) - povm.effects[j]).max() <= 1e-10

    def test_all_subsets_additive(self, rng):
        povm = random_povm(rng, 2, 3)
        dil = naimark_dilate(povm)
        from itertools import combinations

        for size in range(len(povm.atoms) + 1):
            for subset in combinations(povm.atoms, size):
                expected = sum(
                    (povm.effects[povm.atom_set.index(a)] for a in subset),
                    np.zeros((2, 2), dtype=complex),
                )
                assert np.abs(povm_compress(dil, subset) - expected).max() <= 1e-10

    def test_rejects_unknown_atom(self):
        dil = naimark_dilate(diagonal_qubit_povm())
        with pytest.raises(ValidationError, match="unknown"):
            povm_compress(dil, ["nope"])
