import numpy as np
import pytest

from neumann import PhasePoint, random_phase_point, validate_spectrum
from neumann.reduction import regular_coordinates


@pytest.fixture
def spec22():
    return validate_spectrum((0.0, 1.0), (2, 2))


@pytest.fixture
def spec212():
    return validate_spectrum((0.0, 1.0, 2.0), (2, 1, 2))


@pytest.fixture
def spec222():
    return validate_spectrum((0.0, 1.0, 2.0), (2, 2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


def random_regular_reduced(spec, rng, eta_scale=0.7):
    """Random (xi, eta, w) on the reduced sphere with every coupling positive."""
    while True:
        p = random_phase_point(spec, rng)
        try:
            rc = regular_coordinates(spec, p)
        except Exception:
            continue
        if np.all(np.abs(rc.xi) > 1e-3) and np.all(rc.w >= 0.0):
            return rc


def reference_point():
    """The standing worked example on T*S^3: all block invariants equal 1/2."""
    return PhasePoint([2 ** -0.5, 0, 2 ** -0.5, 0], [0.0, 1.0, 0.0, -1.0])
