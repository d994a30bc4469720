"""Quantile routines against high-precision mpmath oracles."""

import numpy as np
import pytest

from pairinfer import DomainError, chi2_quantile_2dof, normal_quantile

from oracles import chi2_quantile_2dof_mp, normal_quantile_mp


def test_normal_quantile_against_series_oracle():
    grid = np.concatenate([
        np.linspace(1e-6, 1e-3, 7),
        np.linspace(0.01, 0.99, 99),
        1.0 - np.linspace(1e-6, 1e-3, 7),
    ])
    for p in grid:
        assert normal_quantile(float(p)) == pytest.approx(
            normal_quantile_mp(float(p)), abs=1e-8)


def test_two_sided_95_multiplier():
    assert normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-8)


def test_normal_quantile_symmetry():
    for p in (0.001, 0.3, 0.42):
        assert normal_quantile(p) == pytest.approx(-normal_quantile(1 - p),
                                                   abs=1e-12)


def test_chi2_quantile_against_oracle():
    for p in (0.05, 0.5, 0.67, 0.9, 0.95, 0.99):
        assert chi2_quantile_2dof(p) == pytest.approx(
            chi2_quantile_2dof_mp(p), abs=1e-8)


def test_chi2_reference_values():
    # c(0.95) = -2 log(0.05), c(0.67) = -2 log(0.33)
    assert chi2_quantile_2dof(0.95) == pytest.approx(5.99146454710798, abs=1e-10)
    assert chi2_quantile_2dof(0.67) == pytest.approx(2.2173252490432223,
                                                     abs=1e-10)


def test_quantile_domain_errors():
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(DomainError):
            normal_quantile(bad)
        with pytest.raises(DomainError):
            chi2_quantile_2dof(bad)
