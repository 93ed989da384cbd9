import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hffeatures.errors import ConvergenceError, InputError, ParameterError
from hffeatures.trend import (
    LAMBDA_PRESETS,
    affine_fit,
    l1_trend_filter,
    lambda_max,
    objective,
    second_diff,
)

from oracles import l1_trend_enumerate


def _gap_ok(est):
    return est.dual_gap <= 1e-8 * (1.0 + abs(est.objective))


def test_lambda_zero_returns_data(rng):
    y = rng.normal(size=300)
    est = l1_trend_filter(y, 0.0)
    assert np.max(np.abs(est.values - y)) <= 1e-8


def test_beyond_lambda_max_is_affine_fit(rng):
    i = np.arange(200)
    y = 0.3 * i - 4 + rng.normal(size=200) + 3 * np.sin(i / 15)
    lmax = lambda_max(y)
    est = l1_trend_filter(y, 1.01 * lmax)
    # closed-form least squares line via the normal equations
    A = np.column_stack([i, np.ones_like(i)]).astype(float)
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    assert np.max(np.abs(est.values - A @ coef)) <= 1e-6
    assert np.max(np.abs(affine_fit(y) - A @ coef)) <= 1e-9
    assert est.knots.size == 0


def test_below_lambda_max_is_not_affine(rng):
    y = np.abs(np.arange(100) - 50.0) + 0.1 * rng.normal(size=100)
    est = l1_trend_filter(y, 0.5 * lambda_max(y))
    assert est.knots.size > 0


def test_duality_gap_random_instances(rng):
    for _ in range(50):
        y = np.cumsum(rng.normal(size=200))
        lam = float(10 ** rng.uniform(-1, 3))
        est = l1_trend_filter(y, lam)
        assert _gap_ok(est), (lam, est.dual_gap, est.objective)


@pytest.mark.parametrize("lam", [0.05, 0.5, 2.0, 10.0])
def test_small_problem_matches_enumeration(lam, rng):
    y = rng.normal(size=6) * 3
    best, x_ref = l1_trend_enumerate(y, lam)
    est = l1_trend_filter(y, lam)
    assert abs(est.objective - best) <= 1e-6
    assert np.max(np.abs(est.values - x_ref)) <= 1e-4


def test_piecewise_linear_output(rng):
    i = np.arange(400)
    y = np.where(i < 200, i * 0.1, 20 - (i - 200) * 0.05) + 0.2 * rng.normal(size=400)
    est = l1_trend_filter(y, 50.0)
    d2 = second_diff(est.values)
    off = np.setdiff1d(np.arange(d2.size), est.knots - 1)
    assert np.max(np.abs(d2[off])) <= 1e-6 * np.abs(y).max()
    assert 1 <= est.knots.size < 20


def test_objective_helper():
    y = np.array([0.0, 1.0, 0.0, 1.0])
    x = np.zeros(4)
    assert objective(y, x, 2.0) == pytest.approx(1.0)
    assert objective(y, y, 1.0) == pytest.approx(4.0)


def test_presets():
    assert LAMBDA_PRESETS == {"sls31": 31.0, "synth301": 301.0}


def test_errors():
    with pytest.raises(ParameterError):
        l1_trend_filter(np.arange(10.0), -1.0)
    with pytest.raises(InputError):
        l1_trend_filter(np.array([1.0, 2.0]), 1.0)
    with pytest.raises(InputError):
        l1_trend_filter(np.array([1.0, np.nan, 3.0, 4.0]), 1.0)


def test_iteration_cap_raises_with_best_iterate(rng):
    y = np.cumsum(rng.normal(size=500))
    with pytest.raises(ConvergenceError) as info:
        l1_trend_filter(y, 5.0, max_iter=2, tol=1e-300)
    assert info.value.best.shape == y.shape
    assert info.value.gap > 0


def test_large_n_converges(rng):
    n = 16384
    t = np.linspace(0, 1, n)
    y = np.where(t < 0.3, 1 - t, 0.7 + 0.5 * (t - 0.3)) + 0.02 * rng.normal(size=n)
    for lam in (8.0, 301.0, 3000.0):
        est = l1_trend_filter(y, lam)
        assert _gap_ok(est)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.integers(3, 40), elements=st.floats(-100, 100)),
       st.floats(0.0, 50.0))
def test_optimality_properties(y, lam):
    est = l1_trend_filter(y, lam)
    assert _gap_ok(est)
    # never worse than the two obvious candidates
    assert est.objective <= objective(y, y, lam) + 1e-7 * (1 + abs(est.objective))
    assert est.objective <= objective(y, affine_fit(y), lam) + 1e-7 * (1 + abs(est.objective))
    # the mean of the data is preserved (D annihilates constants)
    assert abs(est.values.mean() - y.mean()) <= 1e-6 * (1 + np.abs(y).max())
