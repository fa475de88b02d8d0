import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pointedmiss.core import (
    Dataset,
    IncompleteRecord,
    PointedSubspace,
    contains,
    orthonormalize,
    project,
    projection_matrix,
    subspace_from_record,
)
from pointedmiss.errors import DimensionMismatch

from conftest import random_basis


class TestSubspaceFromRecord:
    def test_one_missing(self):
        s = subspace_from_record(IncompleteRecord([1, 0], [True, False]))
        np.testing.assert_array_equal(s.basepoint, [1, 0])
        np.testing.assert_array_equal(s.basis, [[0], [1]])

    def test_complete(self):
        s = subspace_from_record(IncompleteRecord([3, 4], [True, True]))
        np.testing.assert_array_equal(s.basepoint, [3, 4])
        assert s.rank == 0
        assert s.basis.shape == (2, 0)

    def test_all_missing(self):
        s = subspace_from_record(IncompleteRecord([0, 0, 0], [False] * 3))
        np.testing.assert_array_equal(s.basis, np.eye(3))

    def test_placeholder_zeroed(self):
        r = IncompleteRecord([5.0, 9.0], [True, False])
        np.testing.assert_array_equal(r.values, [5.0, 0.0])

    def test_nan_constructor(self):
        r = IncompleteRecord.from_array([1.0, np.nan, 2.0])
        np.testing.assert_array_equal(r.observed, [True, False, True])
        np.testing.assert_array_equal(r.missing, [1])

    def test_canonical_mask_roundtrip(self):
        s = subspace_from_record(IncompleteRecord([1, 0, 0, 4], [True, False, False, True]))
        np.testing.assert_array_equal(s.canonical_mask(), [False, True, True, False])

    def test_general_basis_not_canonical(self):
        s = PointedSubspace([0, 0], np.array([[1], [1]]) / np.sqrt(2))
        assert s.canonical_mask() is None

    @given(
        arrays(np.float64, 6, elements=st.floats(-100, 100)),
        arrays(np.bool_, 6),
        arrays(np.float64, 6, elements=st.floats(-1e3, 1e3)),
    )
    def test_any_fill_is_contained(self, values, observed, fill):
        s = subspace_from_record(IncompleteRecord(values, observed))
        point = np.where(observed, values, fill)
        assert contains(s, point, tol=1e-8 * (1 + np.abs(fill).max()))


class TestOrthonormalize:
    def test_scaling(self):
        np.testing.assert_allclose(orthonormalize([[2.0, 0.0]]), [[1.0], [0.0]])

    def test_full_rank_plane(self):
        q = orthonormalize([[1.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(q, np.eye(2), atol=1e-15)

    def test_dependent_pair(self):
        q = orthonormalize([[1.0, 1.0], [2.0, 2.0]], tol=1e-10)
        assert q.shape == (2, 1)
        np.testing.assert_allclose(q[:, 0], np.array([1, 1]) / np.sqrt(2))

    def test_empty(self):
        assert orthonormalize([], dimension=3).shape == (3, 0)

    def test_matrix_input_columns(self, rng):
        a = rng.standard_normal((5, 3))
        q = orthonormalize(a)
        assert q.shape == (5, 3)

    def test_mismatched_lengths(self):
        with pytest.raises(DimensionMismatch):
            orthonormalize([[1.0, 0.0], [1.0, 0.0, 0.0]])

    @settings(max_examples=60)
    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
    def test_span_preserved_and_orthonormal(self, n, k, seed):
        rng = np.random.default_rng(seed)
        rank = min(n, k, rng.integers(1, k + 1))
        a = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, k))
        q = orthonormalize(a)
        assert q.shape[1] == np.linalg.matrix_rank(a)
        np.testing.assert_allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-10)
        residual = a - q @ (q.T @ a)
        assert np.abs(residual).max() <= 1e-8 * max(1.0, np.abs(a).max())


class TestProjection:
    def test_axis(self):
        np.testing.assert_array_equal(projection_matrix([[1.0], [0.0]]), [[1, 0], [0, 0]])

    def test_diagonal_direction(self):
        v = np.array([[1.0], [1.0]]) / np.sqrt(2)
        np.testing.assert_allclose(projection_matrix(v), [[0.5, 0.5], [0.5, 0.5]])

    def test_empty_basis(self):
        np.testing.assert_array_equal(projection_matrix(np.zeros((3, 0))), np.zeros((3, 3)))

    def test_project_examples(self):
        np.testing.assert_array_equal(project([[1.0], [0.0]], [3, 7]), [3, 0])
        v = np.array([[1.0], [1.0]]) / np.sqrt(2)
        np.testing.assert_allclose(project(v, [1, 0]), [0.5, 0.5])
        np.testing.assert_array_equal(project(np.zeros((2, 0)), [4, 5]), [0, 0])

    @pytest.mark.parametrize("n,k", [(1, 0), (1, 1), (4, 2), (7, 3), (10, 10)])
    def test_projector_properties(self, rng, n, k):
        b = random_basis(rng, n, k)
        p = projection_matrix(b)
        np.testing.assert_allclose(p, p.T, atol=1e-10)
        np.testing.assert_allclose(p @ p, p, atol=1e-10)
        assert np.trace(p) == pytest.approx(k, abs=1e-10)
        w = np.linalg.eigvalsh(p)
        assert np.all(np.minimum(np.abs(w), np.abs(w - 1)) <= 1e-8)

    def test_residual_orthogonal(self, rng):
        b = random_basis(rng, 6, 3)
        y = rng.standard_normal(6)
        r = y - project(b, y)
        np.testing.assert_allclose(b.T @ r, 0, atol=1e-12)


class TestContains:
    line = PointedSubspace([1.0, 0.0], [[0.0], [1.0]])

    def test_on_line(self):
        assert contains(self.line, [1, 9])

    def test_off_line(self):
        assert not contains(self.line, [2, 0])

    def test_point(self):
        s = subspace_from_record(IncompleteRecord([3, 4], [True, True]))
        assert contains(s, [3, 4])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            contains(self.line, [1, 2, 3])


class TestTypes:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            PointedSubspace([0, 0], [[1.0], [1.0]])

    def test_immutable_arrays(self):
        s = PointedSubspace([0.0, 1.0], [[1.0], [0.0]])
        with pytest.raises(ValueError):
            s.basepoint[0] = 3.0

    def test_dataset_from_records(self):
        recs = [IncompleteRecord([1, 2], [True, False], 1), IncompleteRecord([3, 4], [True, True], -1)]
        d = Dataset.from_records(recs)
        assert d.dimension == 2 and len(d) == 2
        np.testing.assert_array_equal(d.labels, [1, -1])
        assert d.missing_fraction() == pytest.approx(0.25)
        back = d.records
        np.testing.assert_array_equal(back[0].observed, [True, False])

    def test_dataset_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            Dataset.from_records([IncompleteRecord([1], [True]), IncompleteRecord([1, 2], [True, True])])
