import pytest

from hypersample.geometry import SpaceParams
from hypersample.transforms import calibrate_plancherel


@pytest.fixture(scope="session")
def calibration():
    """One calibration run shared by the whole session."""
    return calibrate_plancherel()


@pytest.fixture(scope="session")
def space(calibration):
    """SpaceParams carrying the measured spectral density constant."""
    return SpaceParams().with_scale(calibration.scale)
