"""Observed cohort data: pair-state counts at two or more times."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .model import GENDER, NONGENDER, GenderPairCounts, PairCounts

# Observations are conceptually integer counts; real-valued entries are
# accepted so model-generated expectations can be used as synthetic data.
_SUM_RTOL = 1e-6


@dataclass(frozen=True)
class Dataset:
    """Observation times with aligned pair counts; the first time is t = 0.

    All observations must sum to the same constant pair total N, and at
    least two observation times are required.
    """

    times: tuple
    observations: tuple

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "observations", tuple(self.observations))
        if len(self.times) != len(self.observations):
            raise DomainError("times and observations must have equal length")
        if len(self.times) < 2:
            raise DomainError("at least two observation times required")
        for a, b in zip(self.times, self.times[1:]):
            if not b > a:
                raise DomainError(
                    f"observation times must strictly increase, got {a} then {b}")
        kinds = {type(obs) for obs in self.observations}
        if kinds == {PairCounts}:
            pass
        elif kinds == {GenderPairCounts}:
            pass
        else:
            raise DomainError("observations must be all PairCounts or all "
                              "GenderPairCounts")
        n0 = self.observations[0].total
        if n0 <= 0:
            raise DomainError("pair total N must be positive")
        for t, obs in zip(self.times, self.observations):
            if abs(obs.total - n0) > _SUM_RTOL * n0:
                raise DomainError(
                    f"counts at time {t:g} sum to {obs.total:g}, expected N={n0:g}")

    @property
    def kind(self):
        return NONGENDER if isinstance(self.observations[0], PairCounts) else GENDER

    @property
    def n(self):
        """Constant pair total N."""
        return self.observations[0].total

    @property
    def initial(self):
        """The first observation, used as the deterministic initial state."""
        return self.observations[0]

    def elapsed(self):
        """Observation times measured from the first one."""
        t0 = self.times[0]
        return tuple(t - t0 for t in self.times)


def nongender_dataset(times, counts) -> Dataset:
    """Dataset from (ss, si, ii) tuples aligned with ``times``."""
    return Dataset(tuple(times), tuple(PairCounts(*c) for c in counts))


def gender_dataset(times, counts) -> Dataset:
    """Dataset from (ss, is_, si, ii) tuples aligned with ``times``."""
    return Dataset(tuple(times), tuple(GenderPairCounts(*c) for c in counts))
