"""
Tests du solveur IF-RK4 et des estimations associées
"""
import math
from pathlib import Path

import numpy as np
import pytest

from errors import ArgumentError, ValidationError, ValidationRangeError
from models import DiagnosticsRecord, ProfileFamily, RadialProfile
from radial_multipliers import LevyOperator, eval_m, symbol_from_multiplier
from solver import (SolverConfig, SolverState, energy_bound, linf_level_estimate, linf_level_sharp,
                    local_time_estimate, max_principle_monitor, riccati_bound, simulate, step)
from spectral_core import Field, PeriodicGrid, spectral_derivatives, transform
from velocity_models import VelocityModel


def _record(t, linf, l2=1.0):
    return DiagnosticsRecord(t=t, linf=linf, l2=l2, grad_max=1.0, holder=1.0, hs=1.0, energy_dissipated=0.0)


class TestLinearPart:

    @pytest.mark.parametrize('profile', [
        RadialProfile(ProfileFamily.POWER, 0.4),
        RadialProfile(ProfileFamily.POWER, 1.0),
        RadialProfile(ProfileFamily.POWER_LOG, 1.0, 0.4, mu=1.0),
    ], ids=['power-0.4', 'power-1', 'power_log'])
    def test_single_mode_decays_exactly(self, profile):
        grid = PeriodicGrid(1, 256)
        epsilon = 0.01
        op = symbol_from_multiplier(profile, grid)
        theta0 = Field.from_function(grid, lambda x: np.cos(3 * x))
        config = SolverConfig(dt=1e-3, t_end=1.0, epsilon=epsilon, nonlinear=False, record_every=1000)
        result = simulate(theta0, VelocityModel('burgers'), op, config)
        t = result.records[-1].t
        assert t == pytest.approx(1.0)
        expected = 0.5 * math.exp(-(eval_m(profile, 3.0) + epsilon * 9) * t)
        assert abs(result.final.spectral[3] - expected) <= 1e-10 * expected
        assert not result.blown_up


class TestConvergence:

    def test_richardson_ratio_is_fourth_order(self, critical_power):
        grid = PeriodicGrid(1, 64)
        op = symbol_from_multiplier(critical_power, grid)
        theta0 = Field.from_function(grid, np.sin)
        finals = []
        for dt in (0.02, 0.01, 0.005):
            config = SolverConfig(dt=dt, t_end=0.2, record_every=1000)
            finals.append(simulate(theta0, VelocityModel('burgers'), op, config).final.spectral)
        coarse = float(np.abs(finals[0] - finals[1]).max())
        fine = float(np.abs(finals[1] - finals[2]).max())
        assert 2 ** 3.5 <= coarse / fine <= 2 ** 4.5

    def test_dissipation_identity(self, critical_power):
        grid = PeriodicGrid(1, 64)
        op = symbol_from_multiplier(critical_power, grid)
        config = SolverConfig(dt=1e-3, t_end=0.5, epsilon=0.01, record_every=50)
        result = simulate(Field.from_function(grid, np.sin), VelocityModel('burgers'), op, config)
        first, last = result.records[0], result.records[-1]
        lost = 0.5 * (first.l2 ** 2 - last.l2 ** 2)
        assert last.energy_dissipated > 0 and last.viscous_dissipated > 0
        assert lost == pytest.approx(last.energy_dissipated + last.viscous_dissipated, rel=1e-5)


class TestMaximumPrinciple:

    def test_burgers_linf_is_nonincreasing(self, critical_power):
        grid = PeriodicGrid(1, 128)
        op = symbol_from_multiplier(critical_power, grid)
        config = SolverConfig(dt=1e-3, t_end=1.0, epsilon=0.05, record_every=10)
        result = simulate(Field.from_function(grid, np.sin), VelocityModel('burgers'), op, config)
        report = max_principle_monitor(result.records, 'linf')
        assert report.passed, report.details
        assert abs(result.records[-1].mean) < 1e-12

    def test_sqg_l2_is_nonincreasing(self, critical_power):
        grid = PeriodicGrid(2, 32)
        op = symbol_from_multiplier(critical_power, grid)
        theta0 = Field.from_function(grid, lambda x, y: np.sin(x) * np.cos(y) + 0.5 * np.cos(2 * x + y))
        config = SolverConfig(dt=1e-3, t_end=0.5, record_every=25)
        result = simulate(theta0, VelocityModel('sqg'), op, config)
        report = max_principle_monitor(result.records, 'l2')
        assert report.passed
        assert result.records[-1].energy_dissipated > 0

    def test_ccf_linf_is_nonincreasing(self, critical_power):
        grid = PeriodicGrid(1, 256)
        op = symbol_from_multiplier(critical_power, grid)
        config = SolverConfig(dt=1e-3, t_end=2.0, epsilon=0.05, record_every=20)
        result = simulate(Field.from_function(grid, np.sin), VelocityModel('ccf'), op, config)
        assert not result.blown_up
        report = max_principle_monitor(result.records, 'linf')
        assert report.passed, report.details

    def test_ipm_l2_is_nonincreasing(self, critical_power):
        grid = PeriodicGrid(2, 32)
        op = symbol_from_multiplier(critical_power, grid)
        theta0 = Field.from_function(grid, lambda x, y: np.cos(x) * np.sin(2 * y) + 0.3 * np.sin(x + y))
        config = SolverConfig(dt=1e-3, t_end=0.5, record_every=25)
        result = simulate(theta0, VelocityModel('ipm2d'), op, config)
        report = max_principle_monitor(result.records, 'l2')
        assert report.passed, report.details
        assert result.records[-1].energy_dissipated > 0

    def test_monitor_flags_growth(self):
        report = max_principle_monitor([_record(0.0, 1.0), _record(0.1, 0.9), _record(0.2, 1.1)])
        assert not report.passed
        assert report.worst_at == pytest.approx(0.2)

    def test_monitor_unknown_norm(self):
        with pytest.raises(ArgumentError):
            max_principle_monitor([_record(0.0, 1.0)], 'hs')


class TestTransport:

    def test_inviscid_burgers_follows_characteristics(self):
        grid = PeriodicGrid(1, 1024)
        config = SolverConfig(dt=1e-3, t_end=0.8, record_every=100)
        result = simulate(Field.from_function(grid, np.sin), VelocityModel('burgers'), LevyOperator.zero(grid),
                          config)
        t = result.records[-1].t
        slope = float(spectral_derivatives(result.final.spectral, grid)[0].min())
        assert slope == pytest.approx(-1.0 / (1.0 - t), rel=0.02)
        assert not result.blown_up

    def test_single_step_matches_simulation(self, grid1d, critical_power):
        op = symbol_from_multiplier(critical_power, grid1d)
        theta0 = Field.from_function(grid1d, np.sin)
        config = SolverConfig(dt=1e-3, t_end=1.0, max_steps=1)
        state = step(SolverState(transform(theta0)), VelocityModel('burgers'), op, config)
        assert state.steps == 1
        assert state.t == pytest.approx(1e-3)
        result = simulate(theta0, VelocityModel('burgers'), op, config)
        np.testing.assert_allclose(state.coeffs, result.final.spectral, atol=1e-15)

    def test_step_budget(self, grid1d, critical_power):
        op = symbol_from_multiplier(critical_power, grid1d)
        config = SolverConfig(dt=1e-3, t_end=1.0, max_steps=5)
        result = simulate(Field.from_function(grid1d, np.sin), VelocityModel('burgers'), op, config)
        assert result.steps == 5
        assert result.summary()['final_time'] == pytest.approx(5e-3)

    def test_snapshots(self, tmp_path, grid1d, critical_power):
        op = symbol_from_multiplier(critical_power, grid1d)
        config = SolverConfig(dt=1e-2, t_end=0.05, snapshot_every=2)
        result = simulate(Field.from_function(grid1d, np.sin), VelocityModel('burgers'), op, config,
                          snapshot_dir=str(tmp_path))
        assert result.snapshots
        assert all(Path(p).exists() and Path(p).parent == tmp_path for p in result.snapshots)


@pytest.mark.slow
class TestBurgersDichotomy:

    def test_critical_dissipation_stays_smooth(self, critical_power):
        grid = PeriodicGrid(1, 4096)
        op = symbol_from_multiplier(critical_power, grid)
        config = SolverConfig(dt=1e-3, t_end=5.0, record_every=100)
        result = simulate(Field.from_function(grid, np.sin), VelocityModel('burgers'), op, config)
        assert not result.blown_up
        assert max(r.grad_max for r in result.records) < 10.0

    def test_supercritical_dissipation_steepens(self):
        grid = PeriodicGrid(1, 4096)
        op = symbol_from_multiplier(RadialProfile(ProfileFamily.POWER, 0.4), grid)
        config = SolverConfig(dt=1e-3, t_end=2.0, record_every=20)
        result = simulate(Field.from_function(grid, np.sin), VelocityModel('burgers'), op, config)
        assert result.blown_up
        assert result.blowup_reason in ('gradient', 'resolution_loss', 'non_finite')
        low, high = result.blowup_bracket
        assert 0.0 <= low <= high < config.t_end
        assert result.records[-1].t < config.t_end


class TestValidation:

    def test_config_ranges(self):
        with pytest.raises(ValidationRangeError):
            SolverConfig(dt=0.0, t_end=1.0)
        with pytest.raises(ValidationRangeError):
            SolverConfig(dt=1e-3, t_end=1.0, holder_beta=1.0)
        with pytest.raises(ValidationError):
            SolverConfig(dt=1e-3, t_end=1.0, scheme='euler')

    def test_operator_grid_must_match(self, grid1d, critical_power):
        op = symbol_from_multiplier(critical_power, PeriodicGrid(1, 32))
        with pytest.raises(ValidationError):
            simulate(Field.from_function(grid1d, np.sin), VelocityModel('burgers'), op,
                     SolverConfig(dt=1e-3, t_end=0.01))

    def test_initial_data_must_be_finite(self, grid1d, critical_power):
        values = np.sin(grid1d.coords[0])
        values[3] = np.nan
        with pytest.raises(ValidationError):
            simulate(Field(grid1d, values), VelocityModel('burgers'), symbol_from_multiplier(critical_power, grid1d),
                     SolverConfig(dt=1e-3, t_end=0.01))


class TestEstimates:

    def test_riccati(self):
        assert riccati_bound(1.0, 1.0, 0.5) == pytest.approx(2.0)
        assert riccati_bound(1.0, 1.0, 2.0) == math.inf

    def test_energy_and_times(self):
        assert energy_bound(1.0, 0.5, 2.0) == pytest.approx(3.0)
        assert local_time_estimate(2.0, 0.25) == pytest.approx(2.0)
        assert linf_level_sharp(1.0, 1.0, 1.0, 1, 1.0) == pytest.approx(math.sqrt(2.0))
        with pytest.raises(ArgumentError):
            local_time_estimate(0.0, 1.0)

    def test_linf_level(self):
        expected = math.sqrt(3.0) * (2.0 ** 3 * 6.0) ** 0.5
        assert linf_level_estimate(1.0, 1.0, 1.0, 0.0, 1, 1.0, 1.0) == pytest.approx(expected)
        with pytest.raises(ArgumentError):
            linf_level_estimate(1.0, 1.0, 0.5, 0.5, 1, 1.0, 1.0)
