import numpy as np
import pytest

from vortexbrain.optics import OpticalConfig
from vortexbrain.synth import ci_fixture


@pytest.fixture(scope="session")
def glyphs():
    """Twenty deterministic 28x28 test images in [0, 1]."""
    return ci_fixture(20).astype(np.float64) / 255.0


@pytest.fixture(scope="session")
def bare_cfg():
    # no beam envelope, no lens chirp, aperture outside the grid: the pure
    # centered transform whose symmetries the physics tests check
    return OpticalConfig(include_lens_term=False, waist_w=np.inf, aperture_a=8.0)


@pytest.fixture(scope="session")
def default_cfg():
    return OpticalConfig()
