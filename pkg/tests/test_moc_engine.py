"""
Tests des modules de continuité
"""
import math

import numpy as np
import pandas as pd
import pytest
from scipy import integrate

from errors import ArgumentError, FitImpossibleError
from moc_engine import (CoefficientChoice, IntegralTable, Moc, eval_omega, eventual_time_t1, export_moc_profile,
                        holder_cap, holder_cap_shape, initial_fit, obeys_moc, select_coefficients,
                        starting_scale_margin, tangent_count_N, validate_shape, xi0_hit_time, xi0_solve)
from models import CriterionConstants, MocFamily, MocParams, ProfileFamily, RadialProfile
from radial_multipliers import eval_m
from spectral_core import Field


@pytest.fixture
def stationary_params(critical_power):
    return MocParams(kappa=1.0, gamma=0.4, delta=0.5, beta=0.5, profile=critical_power)


@pytest.fixture
def fractional():
    return RadialProfile(ProfileFamily.POWER, 0.6)


@pytest.fixture
def eventual_params(fractional):
    return MocParams(kappa=0.5, gamma=0.1, delta=0.5, beta=0.7, profile=fractional, rho=0.3, A0=2.0)


class TestStationaryFamily:

    def test_values_on_both_pieces(self, stationary_params):
        moc = Moc.stationary(stationary_params)
        assert moc.omega(0.5) == pytest.approx(1.0)
        assert moc.omega(0.125) == pytest.approx(0.5)
        assert moc.omega(0.5 * math.e) == pytest.approx(1.4, rel=1e-9)

    def test_derivative_jump_at_delta(self, stationary_params):
        value = eval_omega(Moc.stationary(stationary_params), 0.5)
        assert value.d_minus == pytest.approx(1.0)
        assert value.d_plus == pytest.approx(0.8)
        assert value.d2 < 0

    def test_shape_is_valid(self, stationary_params):
        report = validate_shape(Moc.stationary(stationary_params))
        assert report.passed, report.details

    def test_shape_rejects_large_gamma(self, stationary_params):
        report = validate_shape(Moc.stationary(stationary_params.with_(gamma=0.6)))
        assert not report.passed
        assert not report.details['coefficients']['pass']
        assert not report.details['jump_sign']['pass']

    def test_plateau_after_cut(self, stationary_params):
        moc = Moc.stationary(stationary_params.with_(c_cut=2.0))
        assert moc.omega(5.0) == pytest.approx(moc.omega(2.0))
        assert eval_omega(moc, 5.0).d_plus == 0.0

    def test_positive_argument_required(self, stationary_params):
        with pytest.raises(ArgumentError):
            Moc.stationary(stationary_params).omega(0.0)

    def test_holder_cap(self, stationary_params):
        assert holder_cap(Moc.stationary(stationary_params)) == pytest.approx(2.0 * math.sqrt(0.5))

    def test_integral_table_matches_quadrature(self, log_corrected):
        table = IntegralTable.build(log_corrected, 0.1, 1e4)
        for xi in (0.3, 12.0, 900.0):
            expected, _ = integrate.quad(lambda eta: eval_m(log_corrected, 1.0 / eta), 0.1, xi, epsrel=1e-12,
                                         limit=200)
            assert table(xi) == pytest.approx(expected, rel=1e-9)


class TestEventualFamily:

    def test_zero_xi0_is_stationary(self, eventual_params):
        eventual = Moc.eventual(eventual_params, 0.0)
        stationary = Moc.stationary(eventual_params)
        xi = np.logspace(-3, 2, 40)
        assert eventual.omega(xi) == pytest.approx(stationary.omega(xi), rel=1e-12)
        assert eventual.omega_at_zero() == 0.0

    @pytest.mark.parametrize('xi0', [0.25, 1.0])
    def test_continuous_across_xi0(self, eventual_params, xi0):
        moc = Moc.eventual(eventual_params, xi0)
        assert moc.omega(xi0 * (1 - 1e-10)) == pytest.approx(moc.omega(xi0 * (1 + 1e-10)), rel=1e-8)
        assert moc.omega_at_zero() > 0

    def test_time_derivative_sign(self, eventual_params):
        moc = Moc.eventual(eventual_params, 1.0)
        assert np.all(moc.d_t(np.linspace(0.01, 0.99, 20)) <= 0)
        assert moc.d_t(1.5) == 0.0
        assert Moc.stationary(eventual_params).d_t(0.3) == 0.0

    def test_requires_A0_above_delta(self, eventual_params):
        with pytest.raises(ArgumentError):
            Moc.eventual(eventual_params.with_(A0=0.4))

    def test_shape_is_valid(self, eventual_params):
        assert validate_shape(Moc.eventual(eventual_params, 1.0)).passed

    def test_xi0_closed_form_matches_ode(self, eventual_params):
        t1 = xi0_hit_time(eventual_params)
        assert t1 == pytest.approx(2.0 ** 0.6 / (0.6 * 0.3))
        times = np.linspace(0.0, 0.9 * t1, 25)
        closed = xi0_solve(eventual_params, times, method='closed_form')
        ode = xi0_solve(eventual_params, times, method='ode')
        assert ode == pytest.approx(closed, rel=1e-6)
        assert np.all(np.diff(closed) < 0)
        assert xi0_solve(eventual_params, 2 * t1) == 0.0

    def test_t1_estimate_for_power(self, eventual_params):
        bound = eventual_time_t1(eventual_params, linf0=1.0, with_hit_time=True)
        assert bound.t1_estimate == pytest.approx(bound.hit_time, rel=1e-14)
        assert bound.t1_shape is not None and bound.t1_shape > 0

    def test_xi0_requires_rho(self, eventual_params):
        with pytest.raises(ArgumentError):
            xi0_solve(eventual_params.with_(rho=0.0), 1.0)

    def test_tangent_count(self):
        assert tangent_count_N(0.5) == 10
        with pytest.raises(ArgumentError):
            tangent_count_N(1.0)


class TestCoefficients:

    def test_stationary_selection(self):
        choice = select_coefficients(1.0, 0.0, 0.5, CriterionConstants(C1=1.0, C2=1.0))
        assert choice.satisfied
        assert choice.kappa == pytest.approx(0.5 * 0.25 / 32.0)
        assert choice.gamma < choice.kappa * 0.5

    def test_eventual_selection(self):
        choice = select_coefficients(0.6, 0.0, 0.7, CriterionConstants(C1=1.0, C2=1.0), MocFamily.EVENTUAL)
        assert choice.satisfied
        assert choice.gamma < (1 - 0.7) * choice.kappa
        assert choice.rho > 0

    def test_beta_outside_window(self):
        with pytest.raises(ArgumentError):
            select_coefficients(0.6, 0.0, 0.3, CriterionConstants(C1=1.0, C2=1.0))


class TestObedience:

    def test_generous_modulus_is_obeyed(self, sine, stationary_params):
        report = obeys_moc(sine, Moc.stationary(stationary_params.scaled(10.0)))
        assert report.passed
        assert report.pairs_checked == 64 * 32

    def test_small_modulus_is_violated(self, sine, stationary_params):
        report = obeys_moc(sine, Moc.stationary(stationary_params.scaled(1e-3)))
        assert not report.passed
        assert report.worst_ratio > 1


class TestInitialFit:

    def test_stationary_fit(self, grid1d, critical_power):
        theta0 = Field.from_function(grid1d, lambda x: 0.1 * np.sin(x))
        choice = CoefficientChoice(1.0, 0.4, 0.0, MocFamily.STATIONARY, 0.5)
        fit = initial_fit(theta0, MocFamily.STATIONARY, 1.0, 0.0, 0.5, choice)
        assert fit.delta == pytest.approx(1.0)
        assert fit.achieved >= fit.target
        assert fit.obey.passed

    def test_stationary_fit_impossible_for_integrable_profile(self, sine):
        choice = CoefficientChoice(0.1, 0.01, 0.0, MocFamily.STATIONARY, 0.5)
        with pytest.raises(FitImpossibleError) as info:
            initial_fit(sine, MocFamily.STATIONARY, 0.5, 0.0, 0.7, choice)
        assert info.value.condition == 'm-int'

    def test_eventual_closed_form(self, sine):
        choice = CoefficientChoice(0.5, 0.1, 0.2, MocFamily.EVENTUAL, 0.5)
        fit = initial_fit(sine, MocFamily.EVENTUAL, 0.6, 0.0, 0.7, choice)
        assert fit.closed_form
        assert fit.A0 / fit.delta == pytest.approx(4.0 ** 2.5)
        assert fit.obey.passed
        assert starting_scale_margin(fit.params, 1.0) >= 0
        assert fit.moc().omega_at_zero() > 2.0

    def test_profile_must_match_exponents(self, sine, fractional):
        choice = CoefficientChoice(0.5, 0.1, 0.2, MocFamily.EVENTUAL, 0.5)
        with pytest.raises(ArgumentError):
            initial_fit(sine, MocFamily.EVENTUAL, 0.5, 0.0, 0.7, choice, profile=fractional)


def test_profile_export(tmp_path, stationary_params):
    path = tmp_path / 'moc_profile.csv'
    export_moc_profile(Moc.stationary(stationary_params), path, np.logspace(-2, 2, 30))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['xi', 'omega', 'd_minus', 'd_plus']
    assert len(frame) == 30
    assert frame['omega'].is_monotonic_increasing


def test_holder_cap_shape():
    e = (0.7 - 1.0 + 0.6) / 0.4
    expected = 0.09 * (0.4 / (0.6 * 0.1)) ** (-e) * 2.0 ** (-e)
    assert holder_cap_shape(0.6, 0.7, 0.1, 2.0) == pytest.approx(expected)
    with pytest.raises(ArgumentError):
        holder_cap_shape(1.0, 0.7, 0.1, 2.0)
