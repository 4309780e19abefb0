import pytest

from bb84link.calibration import CalibrationTargets, calibrate
from bb84link.params import LinkParams


@pytest.fixture(scope="session")
def ase_calibration():
    return calibrate(CalibrationTargets(7600.0, 0.042, 15.2, 0.11), LinkParams())


@pytest.fixture(scope="session")
def ase_params(ase_calibration):
    return ase_calibration.params
