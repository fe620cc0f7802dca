"""
Fixtures partagées des tests
"""
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from models import KernelSpec, ProfileFamily, RadialProfile  # noqa: E402
from spectral_core import Field, PeriodicGrid  # noqa: E402


@pytest.fixture
def grid1d():
    return PeriodicGrid(1, 64)


@pytest.fixture
def grid2d():
    return PeriodicGrid(2, 16)


@pytest.fixture
def sine(grid1d):
    return Field.from_function(grid1d, np.sin)


@pytest.fixture
def critical_power():
    """m(r) = r"""
    return RadialProfile(ProfileFamily.POWER, 1.0)


@pytest.fixture
def power_half():
    return RadialProfile(ProfileFamily.POWER, 0.5)


@pytest.fixture
def log_corrected():
    """m(r) = r/log(e+r), exposants (1, 0.4)"""
    return RadialProfile(ProfileFamily.POWER_LOG, 1.0, 0.4, mu=1.0)


@pytest.fixture
def critical_kernel_1d(critical_power):
    return KernelSpec(critical_power, d=1)
