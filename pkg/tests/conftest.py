import numpy as np
import pytest

from coorbit import cover as cv
from coorbit import matgroup as mg

ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@pytest.fixture(scope="session")
def dyadic_spec():
    return mg.cyclic(2.0 * np.eye(2))


@pytest.fixture(scope="session")
def dyadic_cover(dyadic_spec):
    # ratio-4 shells with no inflation: the reference dyadic geometry
    return cv.build_induced_cover(dyadic_spec, 8,
                                  cv.CoverParams(ratio=4.0, inflate=1.0))


@pytest.fixture(scope="session")
def counterexample_pair():
    return (mg.cyclic(np.diag([3.0, 2.0, 2.0])),
            mg.cyclic(np.diag([2.0, 2.0, 3.0])))


@pytest.fixture(scope="session")
def rot_generator():
    return np.eye(2) + ROT2
