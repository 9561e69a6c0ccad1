import numpy as np
import pytest

from gasketlab import geom


@pytest.fixture(scope="session")
def unit_triple():
    return geom.triple_from_curvatures(1.0, 1.0, 1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)


def random_triple(rng, lo=0.1, hi=10.0):
    """Random curvature triple, randomly rotated and translated."""
    a, b, c = rng.uniform(lo, hi, 3)
    t = geom.triple_from_curvatures(a, b, c)
    return geom.transform_triple(
        t,
        scale=1.0,
        rotate=float(rng.uniform(0.0, 6.28)),
        translate=(float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5))),
    )
