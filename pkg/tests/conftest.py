import numpy as np
import pytest

from pointedmiss.core import PointedSubspace


def random_spd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.exp(rng.uniform(0, np.log(cond), n))
    return (q * w) @ q.T


def random_basis(rng, n, k):
    if k == 0:
        return np.zeros((n, 0))
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q


def random_subspace(rng, n, k=None, label=None):
    k = rng.integers(0, n + 1) if k is None else k
    return PointedSubspace(rng.standard_normal(n), random_basis(rng, n, k), label)


def random_mask_subspace(rng, n, p=0.4):
    mask = rng.random(n) < p
    idx = np.flatnonzero(mask)
    basis = np.zeros((n, idx.size))
    basis[idx, np.arange(idx.size)] = 1.0
    x = np.where(mask, 0.0, rng.standard_normal(n))
    return PointedSubspace(x, basis), mask


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
