import math

import pytest

from fspmag.model import CellParams, FieldConfig

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def dyn_cfg() -> FieldConfig:
    """The dynamics operating point: B_m = 18 uT, B_tot = 50 uT."""
    return FieldConfig(b_z=math.sqrt(50000.0 ** 2 - 18000.0 ** 2),
                       b_m=18000.0, omega_m=TWO_PI * 480.0)


@pytest.fixture(scope="session")
def cal_cfg() -> FieldConfig:
    """The calibration operating point: B_m = 19 uT, B_tot = 50 uT."""
    return FieldConfig(b_z=math.sqrt(50000.0 ** 2 - 19000.0 ** 2),
                       b_m=19000.0, omega_m=TWO_PI * 480.0)


@pytest.fixture(scope="session")
def cell() -> CellParams:
    return CellParams(t2=3e-3)
