import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from seli_mfg.acceptance import ReproductionContext
from seli_mfg.model import reference_scenario

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def reference():
    return reference_scenario()


@pytest.fixture(scope="session")
def ctx():
    """Calibrated reference study shared by every slow test."""
    ctx = ReproductionContext()
    ctx.mfe  # calibration happens here, outside any timed check
    return ctx


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
