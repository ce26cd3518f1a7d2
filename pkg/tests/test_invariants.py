import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvlab.acceptance import brute_force_ricci, random_form, random_model
from curvlab.errors import DegeneratePlane
from curvlab.invariants import (
    check_invariance,
    covariant_norm,
    elementary_of_block_curvatures,
    ordered_curvature_difference,
    ricci,
    scalar_curvature,
    scalar_curvature_in_basis,
    sectional_curvature,
    symmetric_combine,
)
from curvlab.structure_group import BlockPermutation, WreathElement, block_transfer, sample_isometry
from curvlab.tensor_core import BlockModelSpace, PseudoONBasis, build_canonical, pseudo_orthonormalize


def mixed_basis(phi, rng):
    """A second pseudo-orthonormal basis: the default one moved by a random isometry."""
    b = pseudo_orthonormalize(phi)
    return PseudoONBasis(sample_isometry(phi, rng) @ b.vectors, b.signs)


class TestRicci:
    def test_zero(self):
        assert np.all(ricci(np.zeros((3,) * 4), np.eye(3)).matrix == 0.0)

    @pytest.mark.parametrize("p, q", [(3, 0), (2, 2), (1, 4), (0, 6)])
    def test_canonical(self, make_form, p, q):
        phi = make_form(p, q)
        t = build_canonical(phi)
        n = p + q
        rho = ricci(t, phi).matrix
        assert np.max(np.abs(rho - (n - 1) * phi)) <= 1e-9
        assert np.max(np.abs(rho - brute_force_ricci(t.components, phi))) <= 1e-9

    def test_block_sum(self, make_form):
        model = BlockModelSpace([make_form(2, 0), make_form(1, 2)])
        rho = ricci(model.tensor(), model.form()).matrix
        expected = model.form().copy()
        expected[2:, 2:] *= 2  # (dim - 1) per block
        assert np.allclose(rho, expected, atol=1e-9)

    def test_basis_independent(self, make_form, rng):
        phi = make_form(2, 3)
        t = build_canonical(phi) * 1.7
        a = ricci(t, phi).matrix
        b = ricci(t, phi, mixed_basis(phi, rng)).matrix
        assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))


class TestScalar:
    def test_zero(self):
        assert scalar_curvature(np.zeros((2,) * 4), np.eye(2)) == 0.0

    @pytest.mark.parametrize("p, q", [(3, 0), (2, 3), (0, 8)])
    def test_canonical(self, make_form, p, q):
        phi = make_form(p, q)
        n = p + q
        assert abs(scalar_curvature(build_canonical(phi), phi) - n * (n - 1)) <= 1e-9

    def test_additive(self, make_form):
        model = BlockModelSpace([make_form(2, 0), make_form(3, 1), make_form(1, 2)])
        assert abs(scalar_curvature(model.tensor(), model.form()) - (2 + 12 + 6)) <= 1e-9

    def test_basis_independent(self, make_form, rng):
        phi = make_form(3, 2)
        t = build_canonical(phi)
        assert scalar_curvature(t, phi) == pytest.approx(scalar_curvature(t, phi, mixed_basis(phi, rng)), rel=1e-9)


class TestSectional:
    def test_canonical_definite(self, rng):
        phi = random_form(rng, 4, 0)
        x, y = rng.standard_normal((2, 4))
        assert sectional_curvature(build_canonical(phi), phi, x, y) == pytest.approx(1.0, abs=1e-12)
        assert sectional_curvature(3.5 * build_canonical(phi), phi, x, y) == pytest.approx(3.5, abs=1e-12)

    def test_spanning_pair_independent(self, make_form, rng):
        phi = make_form(1, 1)
        t = 2.5 * build_canonical(phi)
        x, y = rng.standard_normal((2, 2))
        m = rng.standard_normal((2, 2))
        u, v = m @ np.array([x, y])
        assert sectional_curvature(t, phi, x, y) == pytest.approx(sectional_curvature(t, phi, u, v), abs=1e-9)

    def test_degenerate_plane(self):
        phi = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(DegeneratePlane):
            sectional_curvature(build_canonical(phi), phi, [1.0, 1.0, 0.0], [1.0, 1.0, 0.0])


class TestSymmetricCombine:
    def test_singleton(self):
        prof = symmetric_combine([4.5])
        assert prof.elementary == (4.5,) and prof.power_sums == (4.5,)

    def test_hand_expansion(self):
        prof = symmetric_combine([1.0, 2.0, 3.0])
        assert prof.elementary == (6.0, 11.0, 6.0)
        assert prof.power_sums == (6.0, 14.0, 36.0)
        assert prof.sorted_values == (1.0, 2.0, 3.0)

    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=6), st.randoms())
    def test_bitwise_permutation_invariant(self, values, rnd):
        shuffled = list(values)
        rnd.shuffle(shuffled)
        a, b = symmetric_combine(values), symmetric_combine(shuffled)
        assert (a.elementary, a.power_sums, a.sorted_values) == (b.elementary, b.power_sums, b.sorted_values)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            symmetric_combine([1.0], kinds=("median",))


class TestCheckInvariance:
    def test_scalar_curvature(self, rng):
        model = BlockModelSpace([random_form(rng, 2, 0), random_form(rng, 0, 2), random_form(rng, 2, 1)])
        rep = check_invariance(scalar_curvature_in_basis, model, model.tensor(), 100, 1e-8, rng)
        assert rep.passed and rep.n_samples == 100

    @given(st.integers(0, 2**32 - 1))
    def test_scalar_curvature_random_models(self, seed):
        r = np.random.default_rng(seed)
        model = random_model(r, max_blocks=3)
        rep = check_invariance(scalar_curvature_in_basis, model, model.tensor(), 5, 1e-8, r)
        assert rep.passed

    def test_symmetric_and_ordered(self, rng):
        model = BlockModelSpace([np.eye(2), np.eye(2)], scales=[2.0, 5.0])
        t = model.curvature()
        swap = WreathElement(
            (block_transfer(model, 1, 0), block_transfer(model, 0, 1)), BlockPermutation((1, 0)), model
        )
        assert check_invariance(elementary_of_block_curvatures, model, t, 0, 1e-8, rng, elements=[swap]).passed
        neg = check_invariance(ordered_curvature_difference, model, t, 0, 1e-8, rng, elements=[swap])
        assert not neg.passed and neg.max_deviation == pytest.approx(6.0)


class TestCovariantNorm:
    def test_zero(self):
        assert covariant_norm(np.eye(3), np.zeros((3,) * 5)) == 0.0

    def test_single_entry(self):
        a = np.zeros((3,) * 5)
        a[0, 1, 2, 0, 1] = 1.5
        assert covariant_norm(np.eye(3), a) == pytest.approx(2.25)

    def test_basis_independent(self, make_form, rng):
        phi = make_form(2, 1)
        a = rng.standard_normal((3,) * 5)
        ref = covariant_norm(phi, a)
        assert covariant_norm(phi, a, mixed_basis(phi, rng)) == pytest.approx(ref, rel=1e-8)

    @given(st.integers(0, 2**32 - 1))
    def test_sign_flip(self, seed):
        r = np.random.default_rng(seed)
        phi = random_form(r, 2, 1)
        a = r.standard_normal((3,) * 5)
        assert covariant_norm(phi, a) == pytest.approx(covariant_norm(-phi, a), rel=1e-12)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            covariant_norm(np.eye(2), np.zeros((3,) * 5))
