import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from widescan.array_model import ArrayGeometry, ArrayModel
from widescan.fixtures import SyntheticCouplingSpec, analytic_patterns, synthetic_coupling

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FREQ = 2.0e9


def make_model(n=5, spacing_wl=0.47, coupling=None, kind="isotropic", resolution=1.0, exponent=1.0):
    """Linear array along y; ``coupling`` is a SyntheticCouplingSpec, an explicit matrix, or None for S = 0."""
    geom = ArrayGeometry.linear(n, spacing_wl, FREQ)
    if coupling is None:
        S = np.zeros((n, n), complex)
    elif isinstance(coupling, SyntheticCouplingSpec):
        S = synthetic_coupling(geom, coupling)
    else:
        S = np.asarray(coupling, complex)
    pats = analytic_patterns(kind, geom, resolution, exponent, (1.0, 0.0, 0.0))
    return ArrayModel(geom, S, pats)


# coupled five-element fixture used by the sweep experiments and CLI config
FIXTURE_COUPLING = SyntheticCouplingSpec(gamma=-0.22, c0=0.3, rho=0.07, phase_factor=2.13)


@pytest.fixture(scope="session")
def decoupled5():
    return make_model(5, 0.47)


@pytest.fixture(scope="session")
def coupled5():
    return make_model(5, 0.47, FIXTURE_COUPLING)


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_weights(n, rng, nonzero=True):
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    if nonzero:
        w[np.abs(w) < 1e-3] = 1.0
    return w
