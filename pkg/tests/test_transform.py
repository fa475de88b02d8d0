import numpy as np
import pytest

from pointedmiss.core import AffineSubspace, PointedSubspace, contains, projection_matrix
from pointedmiss.errors import BasepointOutsideConstraint, DimensionMismatch, InvalidK
from pointedmiss.moments import Moments, sample_moments
from pointedmiss.transform import (
    AffineMap,
    apply_affine,
    compose,
    intersect_constraint,
    pca_map,
    principal_axes,
    whitening_map,
)

from conftest import random_basis, random_spd, random_subspace

E1 = [[1.0], [0.0]]
E2 = [[0.0], [1.0]]


def same_span(a, b, atol=1e-8):
    return a.shape == b.shape and np.allclose(projection_matrix(a), projection_matrix(b), atol=atol)


class TestApplyAffine:
    def test_axis_scaling(self):
        out = apply_affine(AffineMap([[2.0, 0.0], [0.0, 1.0]], [0.0, 0.0]), PointedSubspace([1.0, 1.0], E1))
        np.testing.assert_allclose(out.basepoint, [2, 1])
        assert same_span(out.basis, np.array(E1))

    def test_rotation(self):
        rot = AffineMap([[0.0, -1.0], [1.0, 0.0]], [0.0, 0.0])
        out = apply_affine(rot, PointedSubspace([1.0, 0.0], E2))
        np.testing.assert_allclose(out.basepoint, [0, 1], atol=1e-15)
        assert same_span(out.basis, np.array(E1))

    def test_rank_collapse(self):
        out = apply_affine(AffineMap([[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0]), PointedSubspace([1.0, 1.0], E2))
        np.testing.assert_allclose(out.basepoint, [1, 0])
        assert out.rank == 0

    def test_dimension_change(self, rng):
        f = AffineMap(rng.standard_normal((2, 5)), rng.standard_normal(2))
        out = apply_affine(f, random_subspace(rng, 5, 3))
        assert out.dimension == 2 and out.rank == 2

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            apply_affine(AffineMap.identity(3), PointedSubspace([1.0, 1.0], E2))

    def test_image_property(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            f = AffineMap(rng.standard_normal((m, n)), rng.standard_normal(m))
            s = random_subspace(rng, n)
            image = apply_affine(f, s)
            for c in rng.standard_normal((5, s.rank)):
                assert contains(image, f(s.basepoint + s.basis @ c), tol=1e-8)

    def test_composition(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            f = AffineMap(rng.standard_normal((n, n)), rng.standard_normal(n))
            g = AffineMap(rng.standard_normal((n, n)), rng.standard_normal(n))
            s = random_subspace(rng, n)
            a = apply_affine(g, apply_affine(f, s))
            b = apply_affine(compose(g, f), s)
            np.testing.assert_allclose(a.basepoint, b.basepoint, atol=1e-8)
            assert same_span(a.basis, b.basis)

    def test_map_roundtrip(self, rng):
        f = AffineMap(rng.standard_normal((3, 4)), rng.standard_normal(3))
        g = AffineMap.from_dict(f.to_dict())
        np.testing.assert_array_equal(g.matrix, f.matrix)
        np.testing.assert_array_equal(g.offset, f.offset)


class TestWhitening:
    def test_diagonal(self):
        f = whitening_map(Moments([2.0, 3.0], np.diag([4.0, 1.0])))
        np.testing.assert_allclose(f([4.0, 3.0]), [1, 0], atol=1e-15)

    def test_identity(self):
        f = whitening_map(Moments([0.0, 0.0, 0.0], np.eye(3)))
        np.testing.assert_allclose(f.matrix, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(f.offset, 0, atol=1e-15)

    def test_symmetric(self, rng):
        f = whitening_map(Moments(np.zeros(4), random_spd(rng, 4)))
        np.testing.assert_array_equal(f.matrix, f.matrix.T)

    @pytest.mark.parametrize("seed", range(5))
    def test_whitened_sample(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        x = rng.multivariate_normal(rng.standard_normal(n), random_spd(rng, n, cond=100), size=500)
        m = sample_moments(x, ridge=0.0)
        z = whitening_map(m)(x)
        assert np.abs(z.mean(axis=0)).max() <= 1e-8
        assert np.abs(np.cov(z.T, ddof=1) - np.eye(n)).max() <= 1e-6

    def test_line_direction_maps_by_inverse_root(self):
        cov = np.array([[2.0, 1.0], [1.0, 2.0]])
        f = whitening_map(Moments([0.0, 0.0], cov))
        out = apply_affine(f, PointedSubspace([1.0, 0.0], E2))
        w, v = np.linalg.eigh(cov)
        direction = (v / np.sqrt(w)) @ v.T @ [0.0, 1.0]
        assert same_span(out.basis, (direction / np.linalg.norm(direction))[:, None])


class TestPca:
    def test_diagonal(self):
        f = pca_map(Moments([1.0, 1.0], np.diag([9.0, 1.0])), 1)
        np.testing.assert_allclose(f.matrix, [[1, 0]])
        np.testing.assert_allclose(f.offset, [-1])

    def test_sign_convention(self, rng):
        _, w = principal_axes(Moments(np.zeros(5), random_spd(rng, 5)), 5)
        for col in w.T:
            assert col[np.argmax(np.abs(col))] > 0

    def test_invalid_k(self):
        m = Moments([0.0, 0.0], np.eye(2))
        for k in (0, 3):
            with pytest.raises(InvalidK):
                pca_map(m, k)

    def test_full_rank_preserves_distances(self, rng):
        x = rng.standard_normal((30, 4)) @ rng.standard_normal((4, 4))
        f = pca_map(sample_moments(x), 4)
        z = f(x)
        d0 = np.linalg.norm(x[:, None] - x[None], axis=-1)
        d1 = np.linalg.norm(z[:, None] - z[None], axis=-1)
        np.testing.assert_allclose(d0, d1, atol=1e-8)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_orthonormal_and_variances(self, rng, k):
        x = rng.standard_normal((200, 5)) @ rng.standard_normal((5, 5))
        m = sample_moments(x, ridge=0.0)
        values, w = principal_axes(m, k)
        np.testing.assert_allclose(w.T @ w, np.eye(k), atol=1e-10)
        z = pca_map(m, k)(x)
        np.testing.assert_allclose(np.var(z, axis=0, ddof=1), values, atol=1e-8)
        assert np.all(np.diff(values) <= 0)

    def test_tie_order_is_stable(self):
        _, w = principal_axes(Moments(np.zeros(3), np.eye(3)), 3)
        np.testing.assert_array_equal(np.abs(w), np.eye(3))


class TestIntersect:
    def test_plane_pair(self):
        s = PointedSubspace(np.zeros(3), np.eye(3)[:, :2])
        w = AffineSubspace(np.zeros(3), np.eye(3)[:, 1:])
        out = intersect_constraint(s, w)
        assert same_span(out.basis, np.eye(3)[:, [1]])

    def test_identical(self, rng):
        b = random_basis(rng, 5, 3)
        s = PointedSubspace(b @ [1.0, 2.0, 3.0], b)
        out = intersect_constraint(s, AffineSubspace(np.zeros(5), b))
        assert same_span(out.basis, b)
        np.testing.assert_array_equal(out.basepoint, s.basepoint)

    def test_trivial(self):
        out = intersect_constraint(PointedSubspace([0.0, 0.0], E1), AffineSubspace([0.0, 0.0], E2))
        assert out.rank == 0

    def test_outside_rejected(self):
        with pytest.raises(BasepointOutsideConstraint):
            intersect_constraint(PointedSubspace([1.0, 0.0], E2), AffineSubspace([0.0, 0.0], E2))

    def test_random_containment(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            bv = random_basis(rng, n, int(rng.integers(1, n + 1)))
            bw = random_basis(rng, n, int(rng.integers(1, n + 1)))
            anchor = rng.standard_normal(n)
            x = anchor + bw @ rng.standard_normal(bw.shape[1])
            out = intersect_constraint(PointedSubspace(x, bv), AffineSubspace(anchor, bw))
            q = out.basis
            np.testing.assert_allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-10)
            assert np.all(np.abs(q - projection_matrix(bv) @ q) <= 1e-8 * n)
            assert np.all(np.abs(q - projection_matrix(bw) @ q) <= 1e-8 * n)
            expected = max(0, bv.shape[1] + bw.shape[1] - n)  # generic position
            assert q.shape[1] == expected
