"""Exact forward solutions of the SI pair models.

Couples are classified by the infection status of the two partners.  The
non-gendered model tracks SS / SI / II pair counts; the gendered model splits
the discordant class by which partner is infected.  Expected counts evolve
under two kinds of hazard: an external force of infection acting on every
susceptible individual, and an internal (within-pair) transmission hazard
acting on the susceptible partner of a discordant pair.

Both linear systems integrate in closed form.  Writing x = tau - lambda for
the non-gendered model,

    P_SS(t) = SS0 * exp(-2*lambda*t)
    P_SI(t) = (SI0 * exp(-x*t) + SS0 * 2*lambda * (1 - exp(-x*t)) / x)
              * exp(-2*lambda*t)
    P_II(t) = N - P_SS(t) - P_SI(t)

with the x -> 0 limit replacing (1 - exp(-x*t))/x by t.  The gendered
solutions have the same shape per discordant class with x_m = tau_mf -
lambda_m and x_f = tau_fm - lambda_f.  Everything here is a pure function of
its arguments; all value types are frozen and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError, UndefinedReparamError

NONGENDER = "nongender"
GENDER = "gender"

PARAM_NAMES = {
    NONGENDER: ("lambda", "tau"),
    GENDER: ("lambda_m", "lambda_f", "tau_mf", "tau_fm"),
}

# Width of the singular band |tau - lambda| below which the analytic limit
# of (1 - exp(-x*t))/x is used instead of the general expression.
EPS_SINGULAR = 1e-8


def _check_rate(name, value):
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")


def _check_count(name, value):
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class PairCounts:
    """Occupancy of the three non-gendered pair states at one time."""

    ss: float
    si: float
    ii: float

    def __post_init__(self):
        for name in ("ss", "si", "ii"):
            _check_count(name, getattr(self, name))

    @property
    def total(self):
        return self.ss + self.si + self.ii

    def as_tuple(self):
        return (self.ss, self.si, self.ii)


@dataclass(frozen=True)
class GenderPairCounts:
    """Occupancy of the four gendered pair states.

    ``is_`` counts pairs with the male partner infected, ``si`` pairs with
    the female partner infected.
    """

    ss: float
    is_: float
    si: float
    ii: float

    def __post_init__(self):
        for name in ("ss", "is_", "si", "ii"):
            _check_count(name, getattr(self, name))

    @property
    def total(self):
        return self.ss + self.is_ + self.si + self.ii

    def as_tuple(self):
        return (self.ss, self.is_, self.si, self.ii)


@dataclass(frozen=True)
class NonGenderParams:
    """Transmission rates (per year) for the non-gendered model."""

    lam: float
    tau: float

    def __post_init__(self):
        _check_rate("lambda", self.lam)
        _check_rate("tau", self.tau)

    @property
    def theta(self):
        """Excess within-pair hazard over the community hazard, tau - lambda."""
        return self.tau - self.lam

    @property
    def phi(self):
        """Coordinate phi with tau = (2*phi + 1)*lambda; undefined at lambda = 0."""
        if self.lam == 0:
            raise DomainError("phi is undefined when lambda = 0")
        return (self.tau / self.lam - 1.0) / 2.0

    def as_vector(self):
        return (self.lam, self.tau)


@dataclass(frozen=True)
class GenderParams:
    """Transmission rates (per year) for the gendered model."""

    lam_m: float
    lam_f: float
    tau_mf: float
    tau_fm: float

    def __post_init__(self):
        _check_rate("lambda_m", self.lam_m)
        _check_rate("lambda_f", self.lam_f)
        _check_rate("tau_mf", self.tau_mf)
        _check_rate("tau_fm", self.tau_fm)

    def as_vector(self):
        return (self.lam_m, self.lam_f, self.tau_mf, self.tau_fm)


@dataclass(frozen=True)
class GenderReparam:
    """Alternate coordinates (lambda, q, theta_m, theta_f) for the gendered model.

    q is the share of the total external force of infection acting on men;
    theta_m and theta_f are dimensionless excesses of internal over external
    hazard.
    """

    lam: float
    q: float
    theta_m: float
    theta_f: float

    def __post_init__(self):
        _check_rate("lambda", self.lam)
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0, 1], got {self.q!r}")
        for name in ("theta_m", "theta_f"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class PairState:
    """Expected (real-valued) pair counts for the non-gendered model."""

    p_ss: float
    p_si: float
    p_ii: float

    @property
    def total(self):
        return self.p_ss + self.p_si + self.p_ii

    def as_tuple(self):
        return (self.p_ss, self.p_si, self.p_ii)


@dataclass(frozen=True)
class GenderPairState:
    """Expected (real-valued) pair counts for the gendered model."""

    p_ss: float
    p_is: float
    p_si: float
    p_ii: float

    @property
    def total(self):
        return self.p_ss + self.p_is + self.p_si + self.p_ii

    def as_tuple(self):
        return (self.p_ss, self.p_is, self.p_si, self.p_ii)


def _check_time(t):
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and >= 0, got {t!r}")


def _decay_integral(x, t):
    """(1 - exp(-x*t)) / x, with the singular limit t as x -> 0.

    expm1 keeps the general branch cancellation-free, so the branch switch
    at EPS_SINGULAR only guards the division.
    """
    if abs(x) < EPS_SINGULAR:
        return t
    return -math.expm1(-x * t) / x


def solve_nongender(params: NonGenderParams, init: PairCounts, t: float) -> PairState:
    """Closed-form expected pair counts at elapsed time t from state ``init``."""
    _check_time(t)
    n = init.total
    if n <= 0:
        raise DomainError("initial counts must sum to a positive total")
    decay = math.exp(-2.0 * params.lam * t)
    p_ss = init.ss * decay
    x = params.tau - params.lam
    p_si = (init.si * math.exp(-x * t)
            + init.ss * 2.0 * params.lam * _decay_integral(x, t)) * decay
    p_ii = max(n - p_ss - p_si, 0.0)
    return PairState(p_ss, p_si, p_ii)


def solve_gender(params: GenderParams, init: GenderPairCounts, t: float) -> GenderPairState:
    """Closed-form expected pair counts for the gendered model.

    The two discordant classes have independent singular limits, applied when
    tau_mf is within EPS_SINGULAR of lambda_m (and likewise for the f -> m
    pair of rates).
    """
    _check_time(t)
    n = init.total
    if n <= 0:
        raise DomainError("initial counts must sum to a positive total")
    decay = math.exp(-(params.lam_m + params.lam_f) * t)
    p_ss = init.ss * decay
    x_m = params.tau_mf - params.lam_m
    p_is = (init.is_ * math.exp(-x_m * t)
            + params.lam_m * init.ss * _decay_integral(x_m, t)) * decay
    x_f = params.tau_fm - params.lam_f
    p_si = (init.si * math.exp(-x_f * t)
            + params.lam_f * init.ss * _decay_integral(x_f, t)) * decay
    p_ii = max(n - p_ss - p_is - p_si, 0.0)
    return GenderPairState(p_ss, p_is, p_si, p_ii)


def reparam_to_rates(r: GenderReparam) -> GenderParams:
    """Map (lambda, q, theta_m, theta_f) to the four gendered rates."""
    lam2 = 2.0 * r.lam
    return GenderParams(
        lam_m=lam2 * r.q,
        lam_f=lam2 * (1.0 - r.q),
        tau_mf=lam2 * (r.q + r.theta_m),
        tau_fm=lam2 * (1.0 - r.q + r.theta_f),
    )


def rates_to_reparam(p: GenderParams) -> GenderReparam:
    """Inverse of :func:`reparam_to_rates`; requires lambda_m + lambda_f > 0."""
    total = p.lam_m + p.lam_f
    if total == 0:
        raise UndefinedReparamError(
            "reparameterization undefined: lambda_m + lambda_f = 0")
    lam = total / 2.0
    q = p.lam_m / total
    return GenderReparam(
        lam=lam,
        q=q,
        theta_m=p.tau_mf / (2.0 * lam) - q,
        theta_f=p.tau_fm / (2.0 * lam) - (1.0 - q),
    )


def params_from_vector(kind, vector):
    """Build a typed parameter object from an ordered rate vector."""
    if kind == NONGENDER:
        lam, tau = vector
        return NonGenderParams(lam, tau)
    if kind == GENDER:
        lam_m, lam_f, tau_mf, tau_fm = vector
        return GenderParams(lam_m, lam_f, tau_mf, tau_fm)
    raise ConfigError(f"unknown model kind {kind!r}")
