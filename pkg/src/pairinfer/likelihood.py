"""Multinomial log-likelihood of pair-count data under the forward models.

The first observation is the conditioning state (deterministic initial
condition), so only terms at later times enter the sum.  Multinomial
coefficients are parameter-independent and omitted.  Impossible data -- a
strictly positive count where the model predicts probability <= 0 -- yields
a -inf sentinel rather than an exception so optimizers can step back into
the feasible region; zero counts contribute nothing even at zero predicted
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DomainError
from .model import (GENDER, NONGENDER, PARAM_NAMES, params_from_vector,
                    solve_gender, solve_nongender)


def _loglik_terms(observed, predicted, n):
    ll = 0.0
    for n_obs, pred in zip(observed, predicted):
        if n_obs > 0:
            p = pred / n
            if p <= 0.0:
                return -math.inf
            ll += n_obs * math.log(p)
    return ll


def log_likelihood_nongender(params, data: Dataset) -> float:
    """Log-likelihood of a non-gendered dataset (t = 0 terms dropped)."""
    if data.kind != NONGENDER:
        raise DomainError("non-gendered likelihood requires non-gendered data")
    init = data.initial
    n = data.n
    ll = 0.0
    for t, obs in zip(data.elapsed()[1:], data.observations[1:]):
        state = solve_nongender(params, init, t)
        term = _loglik_terms(obs.as_tuple(), state.as_tuple(), n)
        if term == -math.inf:
            return -math.inf
        ll += term
    return ll


def log_likelihood_gender(params, data: Dataset) -> float:
    """Log-likelihood of a gendered dataset (t = 0 terms dropped)."""
    if data.kind != GENDER:
        raise DomainError("gendered likelihood requires gendered data")
    init = data.initial
    n = data.n
    ll = 0.0
    for t, obs in zip(data.elapsed()[1:], data.observations[1:]):
        state = solve_gender(params, init, t)
        term = _loglik_terms(obs.as_tuple(), state.as_tuple(), n)
        if term == -math.inf:
            return -math.inf
        ll += term
    return ll


def log_likelihood(kind, params, data: Dataset) -> float:
    if kind == NONGENDER:
        return log_likelihood_nongender(params, data)
    if kind == GENDER:
        return log_likelihood_gender(params, data)
    raise ConfigError(f"unknown model kind {kind!r}")


def saturated_log_likelihood(data: Dataset) -> float:
    """Upper bound attained when predicted proportions equal observed ones.

    By Gibbs' inequality the likelihood can never exceed
    sum_t sum_x N_x^t * log(N_x^t / N) over the non-conditioning times.
    """
    n = data.n
    total = 0.0
    for obs in data.observations[1:]:
        for c in obs.as_tuple():
            if c > 0:
                total += c * math.log(c / n)
    return total


@dataclass(frozen=True)
class GridAxis:
    """One parameter axis, linearly spaced unless ``log`` is set.

    n = 1 denotes a single point at ``lo`` (used for pinned-parameter grids);
    otherwise lo < hi is required.  Log spacing needs lo > 0.
    """

    name: str
    lo: float
    hi: float
    n: int
    log: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("grid axis needs at least one point")
        if self.lo < 0:
            raise ConfigError("grid axis minimum must be >= 0")
        if self.n >= 2 and not self.hi > self.lo:
            raise ConfigError("grid axis maximum must exceed minimum")
        if self.hi < self.lo:
            raise ConfigError("grid axis maximum must be >= minimum")
        if self.log and self.lo <= 0:
            raise ConfigError("log-spaced axis needs a positive minimum")

    def values(self):
        if self.log:
            return np.geomspace(self.lo, self.hi, self.n)
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class GridSpec:
    """An ordered collection of grid axes."""

    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate grid axis names: {names}")


@dataclass
class SurfaceResult:
    """Log-likelihood evaluated over a two-axis grid.

    ``loglik`` holds raw values (row-major: rows follow the first axis);
    ``normalized`` subtracts the finite maximum so the grid max is exactly 0,
    with -inf sentinels preserved.
    """

    axis_names: tuple
    axis_values: tuple
    loglik: np.ndarray
    normalized: np.ndarray
    max_loglik: float
    argmax: tuple
    fixed: dict = field(default_factory=dict)


def _resolve_axes(kind, grid: GridSpec, fixed):
    names = PARAM_NAMES[kind]
    axis_names = [a.name for a in grid.axes]
    for name in axis_names:
        if name not in names:
            raise ConfigError(f"unknown parameter {name!r} for model {kind!r}")
    for name in fixed:
        if name not in names:
            raise ConfigError(f"unknown fixed parameter {name!r} for model {kind!r}")
        if name in axis_names:
            raise ConfigError(f"parameter {name!r} is both a grid axis and fixed")
    missing = [n for n in names if n not in axis_names and n not in fixed]
    if missing:
        raise ConfigError(f"parameters not covered by grid or fixed: {missing}")
    return names


def likelihood_surface(kind, data: Dataset, grid: GridSpec, fixed=None) -> SurfaceResult:
    """Evaluate the log-likelihood over a 2-axis grid, others held fixed."""
    fixed = dict(fixed or {})
    if len(grid.axes) != 2:
        raise ConfigError("likelihood_surface requires exactly two grid axes")
    names = _resolve_axes(kind, grid, fixed)
    ax0, ax1 = grid.axes
    v0 = ax0.values()
    v1 = ax1.values()
    values = {}
    values.update(fixed)
    out = np.empty((len(v0), len(v1)))
    for i, a in enumerate(v0):
        values[ax0.name] = float(a)
        for j, b in enumerate(v1):
            values[ax1.name] = float(b)
            params = params_from_vector(kind, [values[n] for n in names])
            out[i, j] = log_likelihood(kind, params, data)
    finite = np.isfinite(out)
    if finite.any():
        max_ll = float(out[finite].max())
        flat = np.where(finite, out, -np.inf).argmax()
        argmax = np.unravel_index(flat, out.shape)
    else:
        max_ll = -math.inf
        argmax = (0, 0)
    normalized = np.where(finite, out - max_ll, out)
    return SurfaceResult(
        axis_names=(ax0.name, ax1.name),
        axis_values=(v0, v1),
        loglik=out,
        normalized=normalized,
        max_loglik=max_ll,
        argmax=tuple(int(k) for k in argmax),
        fixed=fixed,
    )


@dataclass
class ProfileCurve:
    """Fixed-slice likelihood curve: one parameter varies, others anchored."""

    name: str
    values: np.ndarray
    loglik: np.ndarray
    anchor: tuple


def slice_profile(kind, data: Dataset, vary: str, axis: GridAxis, anchor) -> ProfileCurve:
    """One-dimensional likelihood slice through ``anchor`` along ``vary``.

    This matches the reported profile panels: the other coordinates stay at
    the anchor (typically the MLE); no re-optimization is performed.
    """
    names = PARAM_NAMES[kind]
    if vary not in names:
        raise ConfigError(f"unknown parameter {vary!r} for model {kind!r}")
    if axis.name != vary:
        raise ConfigError(f"axis name {axis.name!r} does not match vary={vary!r}")
    anchor_vec = list(anchor.as_vector())
    idx = names.index(vary)
    xs = axis.values()
    ys = np.empty_like(xs)
    for k, x in enumerate(xs):
        vec = list(anchor_vec)
        vec[idx] = float(x)
        ys[k] = log_likelihood(kind, params_from_vector(kind, vec), data)
    return ProfileCurve(name=vary, values=xs, loglik=ys,
                        anchor=tuple(anchor_vec))
