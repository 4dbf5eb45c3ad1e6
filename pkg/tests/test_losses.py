import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psps.dataio import SparseDataset
from psps.losses import LOGREG, NLLSQ, LossOracle, fd_gradient, fd_hvp, rel_error


def make_oracle(family, n=12, d=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    if family == LOGREG:
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    else:
        y = (rng.random(n) < 0.5).astype(float)
    return LossOracle(SparseDataset.from_dense(X, y), family)


FAMILIES = [LOGREG, NLLSQ]


def test_logreg_at_zero():
    o = make_oracle(LOGREG)
    assert o.value(np.zeros(5), [0, 3, 4]) == pytest.approx(np.log(2), abs=1e-15)


def test_nllsq_at_zero():
    o = make_oracle(NLLSQ)
    assert o.value(np.zeros(5), [1, 2]) == pytest.approx(0.25, abs=1e-15)


def test_logreg_no_overflow():
    o = LossOracle(SparseDataset.from_dense([[1.0, 0.0]], [1.0]), LOGREG)
    # log(1 + e^-100) at 120 digits (mpmath)
    expected = 3.720075976020835962959696e-44
    assert o.value(np.array([100.0, 0.0])) == pytest.approx(expected, rel=1e-14)
    assert np.isfinite(o.value(np.array([-1e4, 0.0])))
    assert o.value(np.array([-1e4, 0.0])) == pytest.approx(1e4)


def test_logreg_gradient_at_zero():
    o = make_oracle(LOGREG)
    batch = np.array([0, 1, 5])
    X, y = o.dataset.dense[batch], o.dataset.y[batch]
    expected = -(y[:, None] * X).sum(0) / (2 * len(batch))
    assert np.allclose(o.gradient(np.zeros(5), batch), expected, rtol=1e-14, atol=1e-16)


def test_nllsq_zero_gradient_at_interpolation():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((4, 3))
    w = rng.standard_normal(3)
    y = 1 / (1 + np.exp(-X @ w))
    o = LossOracle.__new__(LossOracle)  # labels are probabilities here, bypass the {0,1} check
    o.dataset, o.family, o.f_star, o._X, o._y = None, NLLSQ, 0.0, X, y
    assert np.allclose(o.gradient(w), 0.0, atol=1e-16)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(family, seed):
    o = make_oracle(family, seed=seed)
    rng = np.random.default_rng(100 + seed)
    w = rng.standard_normal(5)
    batch = rng.choice(12, 6, replace=False)
    assert rel_error(o.gradient(w, batch), fd_gradient(o, w, batch)) < 1e-5


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("seed", range(20))
def test_hvp_matches_finite_differences(family, seed):
    o = make_oracle(family, seed=seed)
    rng = np.random.default_rng(200 + seed)
    w, z = rng.standard_normal(5), rng.standard_normal(5)
    batch = rng.choice(12, 6, replace=False)
    assert rel_error(o.hvp(w, batch, z), fd_hvp(o, w, batch, z)) < 1e-4


@pytest.mark.parametrize("family", FAMILIES)
def test_hvp_zero_direction(family):
    o = make_oracle(family)
    assert np.array_equal(o.hvp(np.ones(5), None, np.zeros(5)), np.zeros(5))


def test_logreg_hvp_at_zero():
    o = make_oracle(LOGREG)
    z = np.arange(5.0)
    X = o.dataset.dense
    assert np.allclose(o.hvp(np.zeros(5), None, z), 0.25 * X.T @ (X @ z) / X.shape[0], rtol=1e-14)


vec = st.lists(st.floats(-3, 3), min_size=5, max_size=5).map(np.array)


@pytest.mark.parametrize("family", FAMILIES)
@given(w=vec, u=vec, v=vec, alpha=st.floats(-5, 5))
def test_hvp_symmetry_and_linearity(family, w, u, v, alpha):
    o = make_oracle(family)
    hu, hv = o.hvp(w, None, u), o.hvp(w, None, v)
    scale = 1.0 + np.linalg.norm(hu) * np.linalg.norm(v) + np.linalg.norm(hv) * np.linalg.norm(u)
    assert abs(hu @ v - hv @ u) <= 1e-10 * scale
    lhs = o.hvp(w, None, alpha * u + v)
    rhs = alpha * hu + hv
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * (1.0 + np.linalg.norm(rhs) + abs(alpha) * np.linalg.norm(hu))


@pytest.mark.parametrize("family", FAMILIES)
@given(w=st.lists(st.floats(-50, 50), min_size=5, max_size=5).map(np.array))
def test_nonnegative(family, w):
    assert make_oracle(family).value(w) >= 0.0


@given(w=vec, z=vec)
def test_logreg_psd(w, z):
    o = make_oracle(LOGREG)
    assert z @ o.hvp(w, None, z) >= -1e-14


def test_dimension_mismatch():
    o = make_oracle(LOGREG)
    with pytest.raises(ValueError):
        o.value(np.zeros(4))
    with pytest.raises(ValueError):
        o.hvp(np.zeros(5), None, np.zeros(3))


def test_label_convention_enforced():
    ds = SparseDataset.from_dense([[1.0], [2.0]], [0.0, 1.0])
    with pytest.raises(ValueError):
        LossOracle(ds, LOGREG)
    LossOracle(ds, NLLSQ)
