import numpy as np
import pytest

from rydberg_dressing.dressing import DressingParams
from rydberg_dressing.pair_potential import DispersionCoeffs, MwCoupling, eigencurves, molecular_potential
from rydberg_dressing.spin_chain import SpinChainModel
from rydberg_dressing.utils import log_grid


@pytest.fixture
def mw():
    return MwCoupling(omega_mw=134.0)


@pytest.fixture
def unit_coeffs():
    # upper branch well at R = 1 um with depth -1/4 to first order
    return DispersionCoeffs(c6_ss=1.0, c6_pp=-2.0, c3_sp=-1.0)


@pytest.fixture
def coarse_grid():
    return log_grid(0.3, 20.0, 600)


@pytest.fixture
def upper_curves(mw, unit_coeffs, coarse_grid):
    return eigencurves(coarse_grid, mw, unit_coeffs, branch="upper")


@pytest.fixture
def upper_potential(upper_curves):
    return molecular_potential(upper_curves)


@pytest.fixture
def fig3_params():
    return DressingParams(omega=1.0, delta=5.5, gamma=0.005)


@pytest.fixture
def fig1_params():
    return DressingParams(omega=1.0, delta=10.0, gamma=0.01)


def random_chain(rng, n_sites, gamma1=0.0, with_tbd=False, g=0.0):
    v = np.triu(rng.uniform(-1.0, 1.0, size=(n_sites, n_sites)), 1)
    g2 = np.triu(rng.uniform(0.0, 0.05, size=(n_sites, n_sites)), 1) if with_tbd else np.zeros((n_sites, n_sites))
    return SpinChainModel(
        n_sites=n_sites, spacing=1.0, couplings=v + v.T,
        gamma1=gamma1, gamma2_matrix=g2 + g2.T, g=g,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def chain_factory(rng):
    def build(n_sites, **kwargs):
        return random_chain(rng, n_sites, **kwargs)
    return build

