import numpy as np
import pytest

from gravinst.metrics import validated_model


@pytest.fixture(scope="session")
def schwarzschild():
    return validated_model("schwarzschild")


@pytest.fixture(scope="session")
def kerr():
    return validated_model("kerr", m=1.0, a=0.3)


@pytest.fixture(scope="session")
def kerr_rational():
    # kappa/Omega = 5/3: an honest S1-instanton with weights {3, 5}
    return validated_model("kerr", m=1.0, a=0.75)


@pytest.fixture(scope="session")
def taub_nut():
    return validated_model("taub-nut")


@pytest.fixture(scope="session")
def taub_bolt():
    return validated_model("taub-bolt")


@pytest.fixture(scope="session")
def flat():
    return validated_model("flat")


@pytest.fixture(scope="session")
def all_models(flat, schwarzschild, kerr, taub_nut, taub_bolt):
    return [flat, schwarzschild, kerr, taub_nut, taub_bolt]


def rel_resid(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) / scale
