# tests/conftest.py
import pytest

from sov6v.config import ModelParams
from sov6v.repspace import DynamicalSpace
from sov6v.sovbasis import SovSystem
from sov6v.spectrum import brute_spectrum
from utils.synthetic import generic_inhomogeneities

ETA = 0.377 + 0.411j
OMEGA = 1j


def make_params(N: int, x: int, y: int, eta: complex = ETA, kappa: complex = 1.0, seed: int = 7) -> ModelParams:
    return ModelParams(
        omega=OMEGA,
        eta=eta,
        x=x,
        y=y,
        N=N,
        xi=generic_inhomogeneities(N, eta, OMEGA, seed=seed),
        kappa=kappa,
    )


# (N, x, y) combinations exercised across the suite
ALLOWED = [(2, 0, 1), (2, 1, 0), (2, 1, 1), (3, 0, 0), (3, 1, 1)]


@pytest.fixture(scope="session")
def params_factory():
    return make_params


@pytest.fixture(scope="session")
def params2():
    return make_params(2, 0, 1)


@pytest.fixture(scope="session")
def space2(params2):
    return DynamicalSpace(params2)


@pytest.fixture(scope="session")
def system2(params2, space2):
    return SovSystem(params2, space2)


@pytest.fixture(scope="session")
def spectrum2(params2, space2):
    return [t for t, _ in brute_spectrum(params2, space2)]


@pytest.fixture(scope="session")
def params3():
    return make_params(3, 1, 1)


@pytest.fixture(scope="session")
def system3(params3):
    return SovSystem(params3)


@pytest.fixture(scope="session")
def spectrum3(params3, system3):
    return [t for t, _ in brute_spectrum(params3, system3.space)]
