"""
Tests des lois de vitesse
"""
import math

import numpy as np
import pytest

from errors import NotApplicableError, ValidationError
from spectral_core import Field, PeriodicGrid
from velocity_models import (VelocityModel, apply_velocity, divergence_residual, drift_constant,
                             ipm_kernel_crosscheck, kernel_pair, velocity_symbol, velocity_symbol_table)


@pytest.fixture
def random_field(grid2d):
    rng = np.random.default_rng(11)
    return Field(grid2d, rng.standard_normal(grid2d.shape))


def test_burgers_is_identity(sine):
    u = apply_velocity(VelocityModel('burgers'), sine)
    assert u.values[0] == pytest.approx(sine.values, abs=1e-14)


def test_ccf_maps_sine_to_cosine(sine):
    u = apply_velocity(VelocityModel('ccf'), sine)
    assert u.values[0] == pytest.approx(np.cos(sine.grid.coords[0]), abs=1e-13)


@pytest.mark.parametrize('kind', ['sqg', 'ipm2d', 'ipm3d_slice'])
def test_divergence_free(kind, random_field):
    assert divergence_residual(VelocityModel(kind), random_field) < 1e-12


def test_divergence_is_two_dimensional(sine):
    with pytest.raises(NotApplicableError):
        divergence_residual(VelocityModel('burgers'), sine)


def test_nyquist_modes_are_zeroed(grid2d):
    table = velocity_symbol_table(VelocityModel('sqg'), grid2d)
    assert np.all(table[:, grid2d.nyquist_mask] == 0)
    assert np.all(table[:, 0, 0] == 0)


def test_sqg_symbol():
    assert velocity_symbol(VelocityModel('sqg'), (1, 0)).ravel() == pytest.approx([0.0, 1j])
    with pytest.raises(ValidationError):
        velocity_symbol(VelocityModel('sqg'), (1,))


def test_custom_without_psi_is_drift(sine):
    u = apply_velocity(VelocityModel('custom', a=(2.0,)), sine)
    assert u.values[0] == pytest.approx(2.0 * sine.values, abs=1e-13)


def test_custom_psi_must_have_zero_mean():
    with pytest.raises(ValidationError):
        VelocityModel('custom', a=(0.0,), psi=((1.0,), (1.0,)))
    with pytest.raises(ValidationError):
        VelocityModel('vortex')


def test_custom_odd_psi_matches_ccf(sine):
    model = VelocityModel('custom', a=(0.0,), psi=((1.0 / math.pi,), (-1.0 / math.pi,)))
    u = apply_velocity(model, sine)
    assert u.values[0] == pytest.approx(np.cos(sine.grid.coords[0]), abs=1e-13)


def test_drift_constants():
    burgers = drift_constant(VelocityModel('burgers'))
    assert (burgers.a_norm, burgers.psi_max) == (1.0, 0.0)
    assert drift_constant(VelocityModel('ccf')).psi_max == pytest.approx(1 / math.pi)
    sqg = drift_constant(VelocityModel('sqg'))
    assert (sqg.a_norm, sqg.psi_max) == (0.0, pytest.approx(1 / (2 * math.pi)))
    assert drift_constant(VelocityModel('ipm2d')).a_norm == 0.5


def test_ipm_pair():
    assert kernel_pair('ipm2d').a == (0.0, 0.5)
    with pytest.raises(NotApplicableError):
        kernel_pair('sqg')


def test_ipm_crosscheck_preconditions(sine):
    with pytest.raises(NotApplicableError):
        ipm_kernel_crosscheck(sine)
    fine = Field.from_function(PeriodicGrid(2, 128), lambda x, y: np.sin(x) * np.cos(y))
    with pytest.raises(ValidationError):
        ipm_kernel_crosscheck(fine)


def test_ipm_crosscheck_constant_field():
    grid = PeriodicGrid(2, 32)
    report = ipm_kernel_crosscheck(Field(grid, np.full(grid.shape, 0.7)))
    assert report.max_abs <= 1e-8


@pytest.mark.slow
def test_ipm_crosscheck_agrees_with_multiplier():
    grid = PeriodicGrid(2, 64)
    report = ipm_kernel_crosscheck(Field.from_function(grid, lambda x, y: np.cos(x + y)))
    assert report.max_relative <= 1e-3
