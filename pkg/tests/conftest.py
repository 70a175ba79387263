import numpy as np
import pytest

from probfuse._kernels import warm_up


@pytest.fixture(scope="session", autouse=True)
def _warm_numba():
    # Compile the jitted kernels once so no test times their first call.
    warm_up()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
