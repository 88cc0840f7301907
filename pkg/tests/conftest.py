import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(over="ignore", under="ignore"):
        yield
