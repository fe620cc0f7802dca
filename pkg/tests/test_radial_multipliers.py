"""
Tests des profils radiaux, symboles et noyaux
"""
import math

import numpy as np
import pytest
from scipy import special

from errors import ArgumentError, OutOfRangeError, ResolutionError
from models import KernelCase, KernelSpec, ProfileFamily, Provenance, QuadratureParams, RadialProfile
from radial_multipliers import (check_mdec, check_positivity_condition, check_power_envelope,
                                check_profile_invariants, eval_d2m, eval_dm, eval_m,
                                kernel_from_multiplier, kernel_value,
                                levy_operator_from_kernel, monotone_maps_check, one_minus_cos, one_minus_j0,
                                sphere_measure, symbol_from_kernel, symbol_from_multiplier,
                                symbol_lower_bound_fit)
from spectral_core import Field, PeriodicGrid

R_GRID = np.logspace(-2, 3, 200)


class TestProfiles:

    def test_power_values(self, power_half):
        assert eval_m(power_half, 4.0) == pytest.approx(2.0)
        assert eval_m(power_half, 0.0) == 0.0
        assert eval_m(power_half, np.array([1.0, 9.0])).tolist() == pytest.approx([1.0, 3.0])

    def test_derivatives_match_finite_differences(self, log_corrected):
        r = np.array([0.3, 1.0, 7.0, 50.0])
        h = 1e-5 * r
        fd1 = (eval_m(log_corrected, r + h) - eval_m(log_corrected, r - h)) / (2 * h)
        fd2 = (eval_dm(log_corrected, r + h) - eval_dm(log_corrected, r - h)) / (2 * h)
        assert eval_dm(log_corrected, r) == pytest.approx(fd1, rel=1e-6)
        assert eval_d2m(log_corrected, r) == pytest.approx(fd2, rel=1e-5)

    def test_table_outside_range(self):
        profile = RadialProfile(ProfileFamily.TABLE, 0.5, table_r=(0.1, 1.0, 10.0), table_m=(0.3, 1.0, 3.2))
        assert eval_m(profile, 1.0) == pytest.approx(1.0)
        with pytest.raises(OutOfRangeError):
            eval_m(profile, 20.0)

    def test_negative_radius_rejected(self, power_half):
        with pytest.raises(ArgumentError):
            eval_m(power_half, -1.0)

    def test_mdec_holds_with_enough_sigma(self, log_corrected):
        report = check_mdec(log_corrected, R_GRID)
        assert report.passed
        assert report.name == 'mdec'

    def test_mdec_lower_side_violated(self):
        tight = RadialProfile(ProfileFamily.POWER_LOG, 1.0, 0.1, mu=1.0)
        report = check_mdec(tight, R_GRID)
        assert not report.passed
        assert report.details['worst_side'] == 'lower'
        assert report.worst_margin < 0

    def test_mdec_undefined_log_factor_fails(self):
        no_shift = RadialProfile(ProfileFamily.POWER_LOG, 1.0, 0.5, mu=1.0, lam=0.0)
        report = check_mdec(no_shift, R_GRID)
        assert not report.passed
        assert report.worst_margin == -math.inf
        assert report.worst_at < 1.0
        assert report.details['undefined'] > 0
        assert check_mdec(no_shift, np.logspace(1, 3, 50)).details['undefined'] == 0

    def test_pure_power_sits_on_both_bounds(self, power_half):
        assert check_mdec(power_half, R_GRID).passed

    def test_profile_invariants(self, log_corrected):
        report = check_profile_invariants(log_corrected, R_GRID)
        assert report.passed
        assert report.details['tail_exponent'] > 0

    def test_monotone_maps(self, log_corrected):
        assert monotone_maps_check(log_corrected, 1.0, 0.6, R_GRID).passed
        with pytest.raises(ArgumentError):
            monotone_maps_check(log_corrected, 0.5, 0.6, R_GRID)

    def test_power_envelope(self, power_half):
        assert check_power_envelope(power_half, np.linspace(0.01, 1.0, 50)).passed

    def test_positivity_condition(self, power_half):
        report = check_positivity_condition(power_half, R_GRID, d=2)
        assert report.passed
        assert report.name == 'positivity_condition'
        assert report.details['d'] == 2
        with pytest.raises(ArgumentError):
            check_positivity_condition(power_half, R_GRID, d=3)


class TestKernels:

    def test_sphere_measure(self):
        assert sphere_measure(1) == pytest.approx(2.0)
        assert sphere_measure(2) == pytest.approx(2 * math.pi)

    def test_case_three_kernel(self, critical_kernel_1d):
        assert kernel_value(critical_kernel_1d, 2.0) == pytest.approx(0.25)

    def test_signed_tail(self):
        profile = RadialProfile(ProfileFamily.POWER, 1.0, c0=1.0)
        positive = KernelSpec(profile, case=KernelCase.I)
        signed = KernelSpec(profile, case=KernelCase.II)
        assert kernel_value(positive, 2.0) > 0
        assert kernel_value(signed, 2.0) < 0
        assert kernel_value(signed, 0.5) == pytest.approx(kernel_value(positive, 0.5))

    def test_one_minus_cos_small_argument(self):
        assert one_minus_cos(1e-6) == pytest.approx(5e-13, rel=1e-9)
        assert one_minus_cos(math.pi) == pytest.approx(2.0)

    def test_one_minus_j0_small_argument(self):
        assert one_minus_j0(1e-6) == pytest.approx(2.5e-13, rel=1e-9)
        assert one_minus_j0(0.0099) == pytest.approx(1.0 - special.j0(0.0099), rel=1e-10)
        assert one_minus_j0(2.0) == pytest.approx(1.0 - special.j0(2.0))


class TestSymbols:

    def test_critical_kernel_gives_pi(self, critical_kernel_1d):
        result = symbol_from_kernel(critical_kernel_1d, 1.0)
        assert result.value == pytest.approx(math.pi, rel=1e-7)

    def test_fractional_kernel_homogeneity(self, power_half):
        spec = KernelSpec(power_half, d=1)
        one = symbol_from_kernel(spec, 1.0).value
        assert one == pytest.approx(2 * math.sqrt(2 * math.pi), rel=1e-6)
        assert symbol_from_kernel(spec, 4.0).value == pytest.approx(2 * one, rel=1e-6)

    def test_zero_frequency(self, critical_kernel_1d):
        assert symbol_from_kernel(critical_kernel_1d, 0.0).value == 0.0

    def test_critical_sqg_kernel(self, critical_power):
        spec = KernelSpec(critical_power, d=2)
        for k in (1.0, 2.0, 5.0):
            assert symbol_from_kernel(spec, [k, 0.0]).value == pytest.approx(2 * math.pi * k, rel=1e-6)
        assert symbol_from_kernel(spec, [3.0, 4.0]).value == pytest.approx(10 * math.pi, rel=1e-6)

    def test_critical_sqg_operator_matches_multiplier(self, critical_power, grid2d):
        op = levy_operator_from_kernel(KernelSpec(critical_power, d=2), grid2d)
        multiplier = symbol_from_multiplier(critical_power, grid2d)
        assert op.symbol == pytest.approx(2 * math.pi * multiplier.symbol, rel=1e-6, abs=1e-12)

    def test_fractional_kernel_homogeneity_2d(self, power_half):
        spec = KernelSpec(power_half, d=2)
        one = symbol_from_kernel(spec, 1.0).value
        assert one > 0
        assert symbol_from_kernel(spec, 4.0).value == pytest.approx(2 * one, rel=1e-6)

    def test_operator_from_kernel_matches_multiplier_up_to_constant(self, critical_kernel_1d, grid1d):
        op = levy_operator_from_kernel(critical_kernel_1d, grid1d)
        assert op.provenance == Provenance.KERNEL_QUADRATURE
        assert op.symbol[3] == pytest.approx(3 * math.pi, rel=1e-7)
        assert op.check_invariants().passed

    def test_multiplier_operator(self, power_half, grid1d):
        op = symbol_from_multiplier(power_half, grid1d)
        assert op.symbol[4] == pytest.approx(2.0)
        assert op.check_invariants().passed
        theta = Field.from_function(grid1d, lambda x: np.cos(4 * x))
        assert op.apply(theta).values == pytest.approx(2.0 * theta.values, abs=1e-12)
        assert op.quadratic_form(theta) == pytest.approx(2.0 * 0.5, rel=1e-12)

    def test_homogeneous_fit(self, power_half):
        op = symbol_from_multiplier(power_half, PeriodicGrid(1, 128))
        fit = symbol_lower_bound_fit(op, 0.5)
        assert fit.c_low == pytest.approx(1.0, rel=1e-15)
        assert fit.c_off == 0.0
        assert fit.homogeneous

    def test_log_corrected_fit_positive(self, log_corrected, grid2d):
        fit = symbol_lower_bound_fit(symbol_from_multiplier(log_corrected, grid2d), 1.0, 0.4)
        assert fit.c_low > 0

    def test_frame_columns(self, power_half, grid2d):
        frame = symbol_from_multiplier(power_half, grid2d).to_frame()
        assert list(frame.columns) == ['k_1', 'k_2', 'A']
        assert len(frame) == 16 * 16


class TestKernelInversion:

    def test_critical_kernel_recovered(self, critical_power):
        inversion = kernel_from_multiplier(critical_power, [0.5, 1.0, 2.0], resolution=512)
        expected = 1.0 / (math.pi * np.array([0.5, 1.0, 2.0]) ** 2)
        assert inversion.values == pytest.approx(expected, rel=5e-3)
        assert inversion.nonnegative

    def test_log_corrected_kernel_is_nonnegative(self):
        beta = 0.5
        alpha = 0.5
        profile = RadialProfile(ProfileFamily.POWER_LOG, alpha, mu=1.0, lam=math.exp((3 + 2 * beta) / alpha))
        inversion = kernel_from_multiplier(profile, [0.5, 1.0, 2.0, 4.0], resolution=512)
        assert inversion.nonnegative
        assert all(sign >= 0 for sign in inversion.signs)
        assert inversion.c5 > 0

    def test_radius_below_resolution(self, critical_power):
        with pytest.raises(ResolutionError):
            kernel_from_multiplier(critical_power, [0.01, 1.0], resolution=512)

    def test_refined_quadrature_agrees(self, critical_kernel_1d):
        base = QuadratureParams()
        coarse = symbol_from_kernel(critical_kernel_1d, 2.5, base).value
        fine = symbol_from_kernel(critical_kernel_1d, 2.5, base.refined()).value
        assert fine == pytest.approx(coarse, rel=1e-8)
        assert fine == pytest.approx(2.5 * math.pi, rel=1e-7)
