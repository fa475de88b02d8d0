import warnings

import numpy as np
import pytest

from pointedmiss.errors import DimensionMismatch, NotConvergedWarning, SingleClass
from pointedmiss.kernel import GramMatrix, KernelConfig
from pointedmiss.svm import SmoConfig, SvmModel, decision_function, dual_objective, predict, train

cvxopt = pytest.importorskip("cvxopt")


def qp_dual_optimum(k, y, c):
    """Reference optimum of the SVM dual from a generic QP solver."""
    from cvxopt import matrix, solvers

    n = len(y)
    q = np.outer(y, y) * k + 1e-12 * np.eye(n)
    g = np.vstack([-np.eye(n), np.eye(n)])
    h = np.concatenate([np.zeros(n), np.full(n, c)])
    solvers.options.update(show_progress=False, abstol=1e-12, reltol=1e-12, feastol=1e-12)
    sol = solvers.qp(matrix(q), matrix(-np.ones(n)), matrix(g), matrix(h),
                     matrix(y.reshape(1, -1).astype(float)), matrix(0.0))
    a = np.clip(np.array(sol["x"]).ravel(), 0, c)
    return dual_objective(k, y, a)


def blobs(rng, n, centre=2.0, dim=2):
    y = np.where(np.arange(n) % 2 == 0, -1.0, 1.0)
    x = rng.standard_normal((n, dim))
    x[:, 0] += centre * y
    return x, y


def kkt_residuals(model, k):
    values = decision_function(model, k)
    free = (model.alphas > 1e-9) & (model.alphas < model.c_param - 1e-9)
    return np.abs(model.labels[free] * values[free] - 1)


class TestToy:
    x = np.array([-2.0, -1.0, 1.0, 2.0])
    y = np.array([-1.0, -1.0, 1.0, 1.0])

    def test_separable(self):
        k = np.outer(self.x, self.x)
        model = train(k, self.y, 1.0)
        labels, values = predict(model, k)
        np.testing.assert_array_equal(labels, self.y)
        grid = np.linspace(-3, 3, 61)
        v = predict(model, np.outer(grid, self.x))[1]
        assert np.all(v[grid <= -1] < 0) and np.all(v[grid >= 1] > 0)

    def test_margin_values(self):
        k = np.outer(self.x, self.x)
        model = train(k, self.y, 1.0)
        assert kkt_residuals(model, k).max(initial=0) <= 1e-3
        # optimum puts the margin at the inner pair
        np.testing.assert_allclose(decision_function(model, k)[[1, 2]], [-1, 1], atol=1e-3)

    def test_conflicting_duplicates(self):
        x = np.array([0.0, 0.0, 1.0, -1.0])
        y = np.array([1.0, -1.0, 1.0, -1.0])
        k = np.outer(x, x) + 1.0
        model = train(k, y, 1.0)
        assert np.isclose(model.alphas[:2], 1.0).all()
        acc = np.mean(predict(model, k)[0] == y)
        assert acc <= 1.0

    def test_single_class(self):
        with pytest.raises(SingleClass):
            train(np.eye(3), [1, 1, 1], 1.0)

    def test_bad_inputs(self):
        with pytest.raises(DimensionMismatch):
            train(np.eye(3), [1, -1], 1.0)
        with pytest.raises(ValueError):
            train(np.eye(2), [1, 2], 1.0)
        with pytest.raises(ValueError):
            train(np.eye(2), [1, -1], 0.0)

    def test_zero_row_gives_bias_sign(self):
        model = train(np.outer(self.x, self.x) + 0.5, self.y, 1.0)
        labels, values = predict(model, np.zeros((1, 4)))
        assert values[0] == model.bias
        assert labels[0] == (1 if model.bias >= 0 else -1)

    def test_prediction_shape_check(self):
        model = train(np.outer(self.x, self.x), self.y, 1.0)
        with pytest.raises(DimensionMismatch):
            predict(model, np.zeros((2, 3)))


class TestBlobs:
    def test_accuracy_and_oracle(self):
        rng = np.random.default_rng(0)
        x, y = blobs(rng, 100)
        k = x @ x.T
        model = train(GramMatrix(k, KernelConfig(0.0)), y, 1.0)
        assert np.mean(predict(model, k)[0] == y) >= 0.95
        ref = qp_dual_optimum(k, y, 1.0)
        assert abs(model.dual_objective - ref) <= 1e-4 * abs(ref)

    @pytest.mark.parametrize("seed", range(10))
    def test_oracle_random_instances(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(8, 51))
        x, y = blobs(rng, n, centre=rng.uniform(0.2, 2.0), dim=int(rng.integers(1, 6)))
        c = float(10.0 ** rng.uniform(-2, 1))
        k = x @ x.T
        model = train(k, y, c)
        ref = qp_dual_optimum(k, y, c)
        assert abs(model.dual_objective - ref) <= 1e-4 * abs(ref)

    def test_constraints_and_kkt(self):
        rng = np.random.default_rng(1)
        x, y = blobs(rng, 60, centre=0.7)
        k = x @ x.T
        cfg = SmoConfig(kkt_tolerance=1e-3)
        model = train(k, y, 0.5, cfg)
        assert abs(model.alphas @ y) <= 1e-6
        assert np.all(model.alphas >= -1e-9) and np.all(model.alphas <= 0.5 + 1e-9)
        assert kkt_residuals(model, k).max(initial=0) <= cfg.kkt_tolerance
        np.testing.assert_array_equal(model.support_indices, np.flatnonzero(model.alphas > 0))

    def test_objective_monotone(self):
        rng = np.random.default_rng(2)
        x, y = blobs(rng, 40, centre=0.5)
        model = train(x @ x.T, y, 1.0, SmoConfig(record_objective=True))
        h = model.objective_history
        assert h.size == model.iterations + 1
        assert np.all(np.diff(h) >= -1e-12)
        assert h[-1] == pytest.approx(model.dual_objective, rel=1e-10)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        x, y = blobs(rng, 50, centre=0.5)
        k = x @ x.T
        a = train(k, y, 1.0, SmoConfig(seed=4))
        b = train(k, y, 1.0, SmoConfig(seed=4))
        assert a.alphas.tobytes() == b.alphas.tobytes() and a.bias == b.bias

    def test_iteration_cap_warns(self):
        rng = np.random.default_rng(4)
        x, y = blobs(rng, 40, centre=0.3)
        with pytest.warns(NotConvergedWarning):
            model = train(x @ x.T, y, 10.0, SmoConfig(max_passes=1, kkt_tolerance=1e-12))
        assert not model.converged


def test_roundtrip_and_compact():
    rng = np.random.default_rng(6)
    x, y = blobs(rng, 30)
    k = x @ x.T
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        model = train(GramMatrix(k, KernelConfig(0.5)), y, 1.0)
    back = SvmModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.alphas, model.alphas)
    assert back.bias == model.bias and back.kernel_config.d_weight == 0.5
    small = model.compact()
    np.testing.assert_allclose(decision_function(small, k[:, model.support_indices]),
                               decision_function(model, k), atol=1e-12)
