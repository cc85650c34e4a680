import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from rydberg_dressing.errors import DomainError, PreconditionError
from rydberg_dressing.pair_potential import (
    DispersionCoeffs,
    MwCoupling,
    asymptotic_hamiltonian,
    build_pair_hamiltonian,
    calibrate_coefficients,
    eigencurves,
    mixing_angle,
    molecular_potential,
)
from rydberg_dressing.utils import log_grid


def test_pair_hamiltonian_is_symmetric(mw, unit_coeffs):
    h = build_pair_hamiltonian(1.5, mw, unit_coeffs)
    np.testing.assert_allclose(h, h.T)
    assert h[0, 0] == pytest.approx(-1.0 / 1.5 ** 6)
    assert h[1, 1] == pytest.approx(-1.0 / 1.5 ** 3)
    assert h[0, 1] == pytest.approx(134.0 / math.sqrt(2.0))


def test_asymptotic_spectrum_resonant_microwave(mw):
    energies = np.linalg.eigvalsh(asymptotic_hamiltonian(mw))
    np.testing.assert_allclose(energies, [-134.0, 0.0, 134.0], atol=1e-9)


@pytest.mark.parametrize("r", [0.0, -1.0, math.inf])
def test_pair_hamiltonian_rejects_bad_distance(mw, unit_coeffs, r):
    with pytest.raises(DomainError):
        build_pair_hamiltonian(r, mw, unit_coeffs)


def test_mixing_angle():
    assert mixing_angle(MwCoupling(omega_mw=1.0, delta_mw=0.0)) == pytest.approx(math.pi / 2)
    assert mixing_angle(MwCoupling(omega_mw=0.5, delta_mw=1.0)) == pytest.approx(math.pi / 4)
    with pytest.raises(DomainError):
        mixing_angle(MwCoupling(omega_mw=0.0, delta_mw=0.0))


def test_negative_microwave_rejected():
    with pytest.raises(DomainError):
        MwCoupling(omega_mw=-1.0)


def test_curves_converge_to_asymptotes(upper_curves):
    np.testing.assert_allclose(upper_curves.branches[-1], upper_curves.asymptotes, atol=1e-3)
    assert upper_curves.branch_of_interest == int(np.argmax(upper_curves.asymptotes))


def test_branch_selectors(mw, unit_coeffs, coarse_grid):
    assert eigencurves(coarse_grid, mw, unit_coeffs, branch="lower").branch_of_interest == 0
    # |ss> has weight 1/2 on the middle dressed channel when delta_mw = 0
    assert eigencurves(coarse_grid, mw, unit_coeffs, branch="ss").branch_of_interest == 1
    assert eigencurves(coarse_grid, mw, unit_coeffs, branch=2).branch_of_interest == 2
    with pytest.raises(DomainError):
        eigencurves(coarse_grid, mw, unit_coeffs, branch=3)


def test_grid_must_increase(mw, unit_coeffs):
    with pytest.raises(PreconditionError):
        eigencurves([2.0, 1.0], mw, unit_coeffs)


def test_upper_branch_well(mw, unit_coeffs, upper_potential):
    # reference well from the largest eigenvalue, which is the upper branch near R = 1
    def upper(r):
        return np.linalg.eigvalsh(build_pair_hamiltonian(r, mw, unit_coeffs))[-1] - mw.omega_mw

    exact = minimize_scalar(upper, bounds=(0.8, 1.3), method="bounded", options={"xatol": 1e-10})
    assert exact.x == pytest.approx(1.0228, abs=5e-4)
    assert exact.fun == pytest.approx(-0.2407, abs=5e-4)
    assert not upper_potential.at_edge
    assert upper_potential.r_min == pytest.approx(exact.x, abs=1e-3)
    assert upper_potential.u_min == pytest.approx(exact.fun, rel=1e-4)


def test_potential_evaluation(upper_potential):
    r = upper_potential.r_grid
    np.testing.assert_allclose(upper_potential.at(r[10:20]), upper_potential.curve[10:20], atol=1e-12)
    # R^-3 continuation past the grid
    tail = upper_potential.at(40.0)
    assert isinstance(tail, float)
    assert tail == pytest.approx(upper_potential.curve[-1] * (r[-1] / 40.0) ** 3)
    # the repulsive core below the grid is not tracked
    with pytest.raises(DomainError):
        upper_potential.at(r[0] * 0.99)
    with pytest.raises(DomainError):
        upper_potential.at(np.array([r[0] * 0.5, 1.0]))


def test_tail_not_converged(mw, unit_coeffs):
    with pytest.raises(PreconditionError):
        molecular_potential(eigencurves(log_grid(0.3, 1.5, 200), mw, unit_coeffs, branch="upper"))


def test_scaled_coefficients_stretch_curves(mw, unit_coeffs, coarse_grid):
    stretched = unit_coeffs.scaled(length=2.0)
    a = eigencurves(coarse_grid, mw, unit_coeffs, branch="upper")
    b = eigencurves(2.0 * coarse_grid, mw, stretched, branch="upper")
    np.testing.assert_allclose(a.branches, b.branches, atol=1e-9)


def test_calibration_places_the_well(mw, unit_coeffs):
    coeffs = calibrate_coefficients(mw, unit_coeffs, r_target=2.0, u_target=-18.0, points=1500)
    pot = molecular_potential(eigencurves(log_grid(0.3, 20.0, 1500), mw, coeffs, branch="upper"))
    assert pot.r_min == pytest.approx(2.0, rel=2e-2)
    assert pot.u_min == pytest.approx(-18.0, rel=1e-2)


def test_calibration_needs_attractive_target(mw, unit_coeffs):
    with pytest.raises(DomainError):
        calibrate_coefficients(mw, unit_coeffs, r_target=2.0, u_target=1.0)


def test_coefficients_must_be_finite():
    with pytest.raises(DomainError):
        DispersionCoeffs(c6_ss=math.nan, c6_pp=0.0, c3_sp=0.0)
