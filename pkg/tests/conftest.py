import numpy as np
import pytest

from jccontrol.model import JCParams


@pytest.fixture(scope="session")
def leo_params():
    return JCParams(omega=1.0, omega_c=1.0, kappa=0.7, lam=0.6, gamma=0.4)


@pytest.fixture(scope="session")
def petz_params():
    return JCParams(omega=1.0, omega_c=1.0, kappa=0.6, lam=0.75, gamma=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(902210)
