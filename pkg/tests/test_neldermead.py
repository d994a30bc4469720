"""Box-constrained simplex optimizer."""

import numpy as np
import pytest
from scipy.optimize import minimize as scipy_minimize

from pairinfer import (NonGenderParams, log_likelihood_nongender,
                       minimize_simplex)
from pairinfer.neldermead import reflect_into_box


def quadratic(center):
    center = np.asarray(center, dtype=float)

    def fn(x):
        d = x - center
        return float(d @ d)

    return fn


def test_recovers_quadratic_minimum():
    result = minimize_simplex(quadratic([0.3, 0.7]), np.array([1.0, 1.0]),
                              [(0.0, 10.0), (0.0, 10.0)], seed=1)
    assert result.converged
    assert result.x == pytest.approx([0.3, 0.7], abs=1e-8)
    assert not result.on_boundary


def test_recovers_4d_quadratic():
    center = [0.1, 0.2, 0.3, 0.4]
    result = minimize_simplex(quadratic(center), np.array([1.0] * 4),
                              [(0.0, 10.0)] * 4, seed=3)
    assert result.converged
    assert result.x == pytest.approx(center, abs=1e-7)


def test_minimum_outside_box_lands_on_bound():
    result = minimize_simplex(quadratic([-1.0, 0.5]), np.array([2.0, 2.0]),
                              [(0.0, 10.0), (0.0, 10.0)], seed=5)
    assert result.x[0] == pytest.approx(0.0, abs=1e-9)
    assert result.x[1] == pytest.approx(0.5, abs=1e-7)
    assert result.on_boundary


def test_all_proposals_stay_in_box():
    seen = []
    lo, hi = 0.5, 2.0

    def fn(x):
        seen.append(x.copy())
        return float((x[0] - 0.1) ** 2 + (x[1] - 3.0) ** 2)

    minimize_simplex(fn, np.array([1.0, 1.0]), [(lo, hi), (lo, hi)], seed=2)
    arr = np.array(seen)
    assert arr.min() >= lo - 1e-15
    assert arr.max() <= hi + 1e-15


def test_reflection_folds_across_bounds():
    lo = np.array([0.0, 0.0])
    hi = np.array([1.0, 1.0])
    assert reflect_into_box(np.array([-0.25, 0.5]), lo, hi) == pytest.approx(
        [0.25, 0.5])
    assert reflect_into_box(np.array([1.2, -3.0]), lo, hi) == pytest.approx(
        [0.8, 0.0])  # far overshoot clips after one fold


def test_deterministic_for_fixed_seed():
    fn = quadratic([0.25, 0.125])
    a = minimize_simplex(fn, np.array([5.0, 5.0]), [(0.0, 10.0)] * 2, seed=11)
    b = minimize_simplex(fn, np.array([5.0, 5.0]), [(0.0, 10.0)] * 2, seed=11)
    assert np.array_equal(a.x, b.x)
    assert a.fun == b.fun and a.n_evals == b.n_evals


def test_never_regresses_below_start():
    fn = quadratic([9.9, 9.9])
    start = np.array([0.5, 0.5])
    result = minimize_simplex(fn, start, [(0.0, 10.0)] * 2, seed=7,
                              max_evals=40)
    assert result.fun <= fn(start)


def test_respects_evaluation_budget():
    calls = [0]

    def fn(x):
        calls[0] += 1
        return float(np.sum(x ** 2))

    result = minimize_simplex(fn, np.array([4.0, 4.0]), [(0.0, 10.0)] * 2,
                              seed=0, max_evals=100)
    assert calls[0] <= 100
    assert result.n_evals == calls[0]


def test_matches_scipy_on_mwanza_likelihood(mwanza):
    def objective(vec):
        lam, tau = vec
        if lam < 0 or tau < 0:
            return np.inf
        return -log_likelihood_nongender(NonGenderParams(lam, tau), mwanza)

    ours = minimize_simplex(objective, np.array([0.002, 0.03]),
                            [(0.0, 10.0)] * 2, seed=0)
    ref = scipy_minimize(objective, [0.002, 0.03], method="Nelder-Mead",
                         options=dict(xatol=1e-12, fatol=1e-14, maxfev=20000))
    assert ours.fun == pytest.approx(ref.fun, abs=1e-9)
