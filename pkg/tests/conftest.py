import pytest

from exokit import two_arm_default


@pytest.fixture
def cfg():
    """Calibrated two-arm setup, 100 Hz control / 80 Hz telemetry."""
    return two_arm_default(calibrated=True)


@pytest.fixture
def cfg_uncal():
    return two_arm_default()
