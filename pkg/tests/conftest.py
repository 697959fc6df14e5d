"""Shared fixtures and closed-form oracles for the test suite."""

import math

import numpy as np
import pytest

from mechcat.core.config import get_settings
from mechcat.physics import fock
from mechcat.schemas.params import TWO_PI, SystemParams

WORKED_BLOCK = np.array([[0.045, 0.14], [0.14, 6.28]])
TAN_THETA = 0.11


@pytest.fixture
def tol():
    """Numerical tolerance for exact identities."""
    return 1e-10


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def system():
    """Reference device at 10 mK."""
    return SystemParams()


@pytest.fixture
def G_minus():
    return TWO_PI * 0.1e6


@pytest.fixture
def theta():
    return math.atan(TAN_THETA)


@pytest.fixture
def worked_block():
    return WORKED_BLOCK.copy()


@pytest.fixture(scope="session")
def worked_params():
    return fock.cm_to_squeezed_thermal(WORKED_BLOCK)


@pytest.fixture(scope="session")
def worked_rho(worked_params):
    """Squeezed thermal state of the worked covariance block."""
    return fock.squeezed_thermal(worked_params, fock.DEFAULT_N_TRUNC)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Keep every test away from the user's environment and ./runs."""
    monkeypatch.delenv("MECHCAT_LOG_LEVEL", raising=False)
    monkeypatch.setenv("MECHCAT_OUTPUT_DIR", str(tmp_path / "default_runs"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------
def steady_state_oracle(G_plus, G_minus, system, n_m, n_b):
    """Mechanical (V_Xb, V_Yb) of the decoupled 2x2 blocks, solved by hand."""
    s_m, s_b = n_m + 0.5, n_b + 0.5
    a, d = system.kappa_m / 2, system.kappa_b / 2
    p, q = G_minus - G_plus, G_minus + G_plus
    den = (a + d) + p * q / d + p * q / a
    v_xb = s_b + (p / d) * (p * s_m - q * s_b) / den
    v_yb = s_b - (q / d) * (p * s_b - q * s_m) / den
    return v_xb, v_yb


def number_generating(V_b, x):
    """
    g(x) = Tr[ρ x^n] for a zero-mean Gaussian state with covariance V_b,
    and its derivative g'(x), valid for |x| < 1.
    """
    V_b = np.asarray(V_b, dtype=float)
    tr, det = float(np.trace(V_b)), float(np.linalg.det(V_b))
    s = (1 + x) / (2 * (1 - x))
    delta = s * s + s * tr + det
    g = 1.0 / ((1 - x) * math.sqrt(delta))
    dg = g * (1.0 / (1 - x) - (2 * s + tr) / (2 * delta * (1 - x) ** 2))
    return g, dg


def number_generating_second(V_b, x, h=1e-5):
    """g''(x) by central difference of the analytic g'."""
    return (number_generating(V_b, x + h)[1] - number_generating(V_b, x - h)[1]) / (2 * h)
