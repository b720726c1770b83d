import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from norming.libs import config
from norming.libs.poly import MultiPoly, multiply, univariate


def product_polynomial(roots) -> MultiPoly:
    """Q(x) Q(y) with Q(t) = prod (t - root)"""
    coeffs = npoly.polyfromroots(roots)
    return multiply(univariate(2, 0, coeffs), univariate(2, 1, coeffs))


def _forget_config():
    if "_config" in vars(config.AppConfig):
        del config.AppConfig._config


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Every test sees default configuration stored under a temporary cache dir"""
    monkeypatch.setenv("XDG_CACHE_HOME", str(tmp_path / "cache"))
    _forget_config()
    yield
    _forget_config()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def product_quadratic() -> MultiPoly:
    return product_polynomial([-0.25, 0.25])


@pytest.fixture
def product_cubic() -> MultiPoly:
    return product_polynomial([-0.4, 0.0, 0.4])


@pytest.fixture
def ellipse() -> MultiPoly:
    """x^2 + 2y^2 - 0.09"""
    return MultiPoly.from_terms(2, {(2, 0): 1.0, (0, 2): 2.0, (0, 0): -0.09})
