"""Independent oracles used by the test suite.

Everything here deliberately avoids the code paths under test: forward
states come from adaptive ODE integration, quantiles from mpmath at high
precision, and Hessians from Richardson extrapolation of plain central
differences.
"""

from __future__ import annotations

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from pairinfer import (GenderPairCounts, GenderParams, NonGenderParams,
                       PairCounts, nongender_dataset, solve_nongender)


def integrate_nongender(params: NonGenderParams, init: PairCounts, t: float):
    """Adaptive high-order integration of the non-gendered ODE system."""
    lam, tau = params.lam, params.tau

    def rhs(_, y):
        return [-2.0 * lam * y[0],
                2.0 * lam * y[0] - (lam + tau) * y[1],
                (lam + tau) * y[1]]

    if t == 0:
        return np.array(init.as_tuple(), dtype=float)
    sol = solve_ivp(rhs, (0.0, t), list(init.as_tuple()), method="DOP853",
                    rtol=1e-12, atol=1e-12, t_eval=[t])
    return sol.y[:, -1]


def integrate_gender(params: GenderParams, init: GenderPairCounts, t: float):
    """Adaptive high-order integration of the gendered ODE system."""
    lm, lf, tmf, tfm = params.as_vector()

    def rhs(_, y):
        return [-(lm + lf) * y[0],
                lm * y[0] - (tmf + lf) * y[1],
                lf * y[0] - (lm + tfm) * y[2],
                (tmf + lf) * y[1] + (lm + tfm) * y[2]]

    if t == 0:
        return np.array(init.as_tuple(), dtype=float)
    sol = solve_ivp(rhs, (0.0, t), list(init.as_tuple()), method="DOP853",
                    rtol=1e-12, atol=1e-12, t_eval=[t])
    return sol.y[:, -1]


def normal_quantile_mp(p, dps=40):
    """Standard normal inverse CDF via mpmath's high-precision erfinv."""
    with mpmath.workdps(dps):
        return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def chi2_quantile_2dof_mp(p, dps=40):
    """Chi-square(2) inverse CDF by bisecting the regularized gamma CDF."""
    with mpmath.workdps(dps):
        target = mpmath.mpf(p)

        def cdf(x):
            return mpmath.gammainc(1, 0, x / 2, regularized=True)

        lo, hi = mpmath.mpf(0), mpmath.mpf(1)
        while cdf(hi) < target:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if cdf(mid) < target:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def plain_central_hessian(fn, x, h):
    """Textbook central-difference Hessian with one fixed step vector."""
    x = np.asarray(x, dtype=float)
    dim = x.size
    hess = np.zeros((dim, dim))
    f0 = fn(x)
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = h[i]
        hess[i, i] = (fn(x + ei) + fn(x - ei) - 2.0 * f0) / h[i] ** 2
        for j in range(i + 1, dim):
            ej = np.zeros(dim)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                fn(x + ei + ej) + fn(x - ei - ej)
                - fn(x + ei - ej) - fn(x - ei + ej)) / (4.0 * h[i] * h[j])
    return hess


def richardson_hessian(fn, x, h):
    """Richardson extrapolation of the central Hessian (steps h and h/2)."""
    h = np.asarray(h, dtype=float)
    coarse = plain_central_hessian(fn, x, h)
    fine = plain_central_hessian(fn, x, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def make_consistent_dataset(rng, horizon=2.0):
    """Synthetic two-time dataset whose counts are exact model expectations.

    The initial composition is chosen so II/SI equals the model's own ratio
    at the second time, which keeps the analytic stationarity target equal
    to the exact-fit target; see the estimator agreement tests.
    """
    while True:
        lam = rng.uniform(0.0015, 0.006)
        tau = rng.uniform(0.03, 0.09)
        ss0 = rng.uniform(1200.0, 2000.0)
        si0 = rng.uniform(30.0, 80.0)
        params = NonGenderParams(lam, tau)
        probe = solve_nongender(params, PairCounts(ss0, si0, 0.0), horizon)
        p_ss, p_si = probe.p_ss, probe.p_si
        # ii0 solving ii0/si0 = P_II/P_SI; P_SS and P_SI do not depend on ii0
        denom = p_si - si0
        if denom <= 1e-6:
            continue
        ii0 = si0 * (ss0 + si0 - p_ss - p_si) / denom
        if ii0 < 0:
            continue
        init = PairCounts(ss0, si0, ii0)
        state = solve_nongender(params, init, horizon)
        data = nongender_dataset((0.0, horizon),
                                 [init.as_tuple(), state.as_tuple()])
        return params, data
