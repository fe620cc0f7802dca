"""
Tests des bornes de dissipation et de dérive, et de la marge du critère
"""
import math

import numpy as np
import pytest

from criterion_lab import (admissible_upper, criterion_margin, dissipation_bound, dissipation_closed_form,
                           drift_bound, drift_bound_alt, estimate_constants, margin_grid, operator_normalization,
                           scenario_audit, tail_integral, tail_integral_closed_form)
from errors import ArgumentError, ValidationError, ValidationRangeError
from models import CriterionConstants, KernelCase, KernelSpec, MocParams, ProfileFamily, RadialProfile
from moc_engine import Moc, select_coefficients
from radial_multipliers import levy_operator_from_kernel, symbol_from_multiplier
from spectral_core import Field
from velocity_models import VelocityModel

UNIT = CriterionConstants(C1=1.0, C2=1.0)


@pytest.fixture
def unit_moc(critical_power):
    return Moc.stationary(MocParams(kappa=1.0, gamma=0.4, delta=1.0, beta=0.5, profile=critical_power))


@pytest.fixture
def selected_moc(critical_power):
    choice = select_coefficients(1.0, 0.0, 0.5, UNIT)
    return Moc.stationary(MocParams(choice.kappa, choice.gamma, 1.0, 0.5, critical_power))


class TestConstants:

    def test_burgers_critical(self, critical_kernel_1d):
        constants = estimate_constants(critical_kernel_1d, VelocityModel('burgers'))
        assert constants.C1 == pytest.approx(1.0, rel=1e-12)
        assert constants.C2 == pytest.approx(1.0)
        assert constants.case == KernelCase.III

    def test_sqg_critical(self, critical_power):
        constants = estimate_constants(KernelSpec(critical_power, d=2), VelocityModel('sqg'), points=12)
        assert constants.C1 == pytest.approx(2.0, rel=1e-6)
        assert constants.C2 == pytest.approx(1.0 / math.pi)

    def test_signed_tail_constants(self):
        profile = RadialProfile(ProfileFamily.POWER, 1.0, c0=1.0)
        constants = estimate_constants(KernelSpec(profile, case=KernelCase.II), VelocityModel('burgers'))
        assert constants.C1p > 0
        assert constants.C2p == 0.0
        expected = min(0.5, constants.C1 * math.log(2.0) ** 2 / (16.0 * constants.C1p))
        assert admissible_upper(constants, profile) == pytest.approx(expected)

    def test_dimension_mismatch(self, critical_kernel_1d):
        with pytest.raises(ValidationError):
            estimate_constants(critical_kernel_1d, VelocityModel('sqg'))

    def test_admissible_upper(self, critical_power):
        assert admissible_upper(UNIT, critical_power) == math.inf
        truncated = RadialProfile(ProfileFamily.POWER, 1.0, c0=3.0)
        assert admissible_upper(UNIT, truncated, KernelCase.I) == pytest.approx(1.5)
        with pytest.raises(ArgumentError):
            admissible_upper(UNIT, critical_power, KernelCase.I)


class TestBounds:

    @pytest.mark.parametrize('xi', [0.01, 0.05, 0.2, 0.5])
    def test_dissipation_below_closed_form(self, unit_moc, xi):
        bound = dissipation_bound(unit_moc, xi, UNIT)
        assert bound < 0
        assert bound <= dissipation_closed_form(unit_moc, xi, UNIT)

    def test_tail_integral_exact(self, unit_moc):
        for xi in (0.04, 0.3):
            expected = 2.0 * (xi ** -0.5 - 1.0) + 1.4
            assert tail_integral(unit_moc, xi) == pytest.approx(expected, rel=1e-7)
            assert tail_integral(unit_moc, xi) <= tail_integral_closed_form(unit_moc, xi)

    def test_tail_integral_on_plateau(self, critical_power):
        moc = Moc.stationary(MocParams(1.0, 0.4, 1.0, 0.5, critical_power, c_cut=2.0))
        assert tail_integral(moc, 4.0) == pytest.approx(moc.omega(2.0) / 4.0)

    def test_closed_forms_limited_to_inner_piece(self, unit_moc):
        with pytest.raises(ArgumentError):
            dissipation_closed_form(unit_moc, 2.0, UNIT)
        with pytest.raises(ArgumentError):
            tail_integral_closed_form(unit_moc, 2.0)

    def test_drift_bound_terms(self, unit_moc):
        xi = 0.25
        D = dissipation_bound(unit_moc, xi, UNIT)
        expected = -D * xi + unit_moc.omega(xi) + xi * tail_integral(unit_moc, xi)
        assert drift_bound(unit_moc, xi, UNIT, D) == pytest.approx(expected, rel=1e-12)

    def test_alternative_drift_bound(self, unit_moc, fractional_eventual):
        assert math.isfinite(drift_bound_alt(unit_moc, 0.5, 1.0))
        assert drift_bound_alt(fractional_eventual, 0.5, 1.0) == math.inf

    def test_outside_admissible_domain(self, unit_moc):
        truncated = CriterionConstants(C1=1.0, C2=1.0, case=KernelCase.I)
        moc = Moc.stationary(unit_moc.params.with_(profile=RadialProfile(ProfileFamily.POWER, 1.0, c0=1.0)))
        with pytest.raises(ValidationRangeError):
            dissipation_bound(moc, 0.8, truncated)


@pytest.fixture
def fractional_eventual():
    profile = RadialProfile(ProfileFamily.POWER, 0.6)
    return Moc.eventual(MocParams(0.5, 0.1, 0.5, 0.7, profile, rho=0.3, A0=2.0), 0.5)


class TestMargin:

    def test_selected_coefficients_satisfy_criterion(self, selected_moc):
        frame = margin_grid(selected_moc, np.logspace(-2, 2, 6), UNIT)
        assert list(frame.columns) == ['xi', 'D_bound', 'Omega_bound', 'margin', 'required']
        assert len(frame) == 6
        assert (frame['margin'] > 0).all()

    def test_large_diffusion_curvature_counts(self, selected_moc):
        plain = criterion_margin(selected_moc, 0.1, UNIT)
        viscous = criterion_margin(selected_moc, 0.1, UNIT, epsilon=0.1)
        assert viscous.margin > plain.margin

    def test_required_flag(self, selected_moc):
        record = criterion_margin(selected_moc, 50.0, UNIT, B0=1e-4)
        assert not record.required
        assert criterion_margin(selected_moc, 50.0, UNIT).required

    def test_argument_checks(self, selected_moc):
        with pytest.raises(ArgumentError):
            criterion_margin(selected_moc, 0.1, UNIT, epsilon=-1.0)
        with pytest.raises(ArgumentError):
            criterion_margin(selected_moc, 0.1, UNIT, xi0=0.5)
        with pytest.raises(ArgumentError):
            margin_grid(selected_moc, [0.1], UNIT, xi0_grid=[0.5])

    def test_eventual_grid_has_xi0_column(self, fractional_eventual):
        constants = CriterionConstants(C1=1.0, C2=1.0)
        frame = margin_grid(fractional_eventual, [0.2, 2.0], constants, xi0_grid=[0.0, 0.5])
        assert 'xi0' in frame.columns
        assert len(frame) == 4
        assert np.isfinite(frame['margin']).all()

    @pytest.mark.slow
    def test_dense_stationary_grid(self, selected_moc):
        xi = np.logspace(-3, 3, 64)
        xi = xi[np.abs(xi - 1.0) > 1e-9]
        frame = margin_grid(selected_moc, xi, UNIT)
        assert (frame['margin'] > 0).all()


class TestScenarioAudit:

    def test_sine_scenarios(self, sine, critical_kernel_1d, critical_power, selected_moc, grid1d):
        model = VelocityModel('burgers')
        constants = estimate_constants(critical_kernel_1d, model)
        op = symbol_from_multiplier(critical_power, grid1d)
        report = scenario_audit(sine, selected_moc, model, op, constants, max_scenarios=8)
        assert report.scale > 0
        assert report.normalization == pytest.approx(1.0 / math.pi, rel=1e-8)
        assert 0 < len(report.scenarios) <= 8
        for audit in report.scenarios:
            assert audit.scenario.ratio >= 0.9
            assert math.isfinite(audit.D_bound) and audit.D_bound < 0
            assert audit.D_ok and audit.Omega_ok
        assert report.passed
        data = report.to_dict()
        assert data['count'] == len(report.scenarios)
        assert data['pass']

    def test_kernel_operator_matches_multiplier_audit(self, sine, critical_kernel_1d, critical_power,
                                                      selected_moc, grid1d):
        model = VelocityModel('burgers')
        constants = estimate_constants(critical_kernel_1d, model)
        by_kernel = scenario_audit(sine, selected_moc, model, levy_operator_from_kernel(critical_kernel_1d, grid1d),
                                   constants, max_scenarios=8)
        by_multiplier = scenario_audit(sine, selected_moc, model, symbol_from_multiplier(critical_power, grid1d),
                                       constants, max_scenarios=8)
        assert by_kernel.normalization == 1.0
        assert by_kernel.passed and by_multiplier.passed
        for k, m in zip(by_kernel.scenarios, by_multiplier.scenarios):
            assert k.exact_D == pytest.approx(math.pi * m.exact_D, rel=1e-6)
            assert k.D_bound == pytest.approx(math.pi * m.D_bound, rel=1e-6)
            assert k.Omega_bound == pytest.approx(m.Omega_bound, rel=1e-6)

    def test_truncated_profile_needs_kernel(self, grid1d):
        truncated = RadialProfile(ProfileFamily.POWER, 1.0, c0=3.0)
        op = symbol_from_multiplier(truncated, grid1d)
        with pytest.raises(ArgumentError):
            operator_normalization(op, truncated)
        spec = KernelSpec(truncated, case=KernelCase.I)
        assert operator_normalization(op, truncated, spec) > 0

    def test_constant_field_has_no_scenario(self, grid1d, critical_kernel_1d, critical_power, selected_moc):
        theta = Field(grid1d, np.ones(grid1d.shape))
        model = VelocityModel('burgers')
        report = scenario_audit(theta, selected_moc, model, symbol_from_multiplier(critical_power, grid1d),
                                UNIT)
        assert report.scale == 0.0
        assert report.passed
        assert report.scenarios == []

    def test_threshold_range(self, sine, grid1d, critical_power, selected_moc):
        with pytest.raises(ArgumentError):
            scenario_audit(sine, selected_moc, VelocityModel('burgers'),
                           symbol_from_multiplier(critical_power, grid1d), UNIT, threshold=0.0)
