import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from rydberg_dressing.dressing import (
    DressingParams,
    approximate_coherence,
    coherence,
    delta2,
    dressed_potential,
    dressed_profile,
    full_dressed_potential,
    gamma1,
    gamma2,
    light_shift,
    light_shift_compensation,
    peak_coherence,
    rmd_regime,
    srd_coherence,
    srd_potential,
    two_photon_rabi,
    v0,
)
from rydberg_dressing.errors import DomainError, SingularityError


def test_saturated_height(fig1_params):
    assert v0(fig1_params) == pytest.approx(1.0 / 8000.0)
    with pytest.raises(DomainError):
        v0(DressingParams(delta=0.0))


def test_dressed_potential_formula(fig1_params):
    u = -18.0
    d2 = delta2(u, fig1_params)
    assert d2 == pytest.approx(2.0)
    expected = v0(fig1_params) * d2 * u / (d2 ** 2 + 0.01 ** 2)
    assert dressed_potential(u, fig1_params) == pytest.approx(expected)
    # enhancement near the well
    assert abs(dressed_potential(u, fig1_params) / v0(fig1_params)) > 5


def test_dressed_potential_limits(fig1_params):
    # blockade plateau for large |U|, vanishing for U -> 0
    assert dressed_potential(1e9, fig1_params) == pytest.approx(v0(fig1_params), rel=1e-6)
    assert dressed_potential(0.0, fig1_params) == 0.0


def test_antiblockade_singularity():
    p = DressingParams(delta=10.0, gamma=0.0)
    with pytest.raises(SingularityError):
        dressed_potential(-20.0, p)
    with pytest.raises(SingularityError):
        full_dressed_potential(-20.0, p)


def test_vectorized_inputs(fig1_params):
    u = np.array([-30.0, -18.0, 5.0])
    v = dressed_potential(u, fig1_params)
    assert v.shape == (3,)
    assert v[1] == pytest.approx(dressed_potential(-18.0, fig1_params))


def test_dephasing_rates(fig1_params):
    assert gamma1(fig1_params) == pytest.approx(0.01 / 400.0)
    assert gamma2(-18.0, fig1_params) == pytest.approx(0.01 / (200.0 * (4.0 + 1e-4)))
    assert gamma2(-18.0, DressingParams(delta=10.0)) == 0.0
    # total over single-body dephasing stays below 2 at the well
    ratio = (2 * gamma1(fig1_params) + gamma2(-18.0, fig1_params)) / (2 * gamma1(fig1_params))
    assert ratio == pytest.approx(1.25, rel=1e-3)


def test_coherence_identity(rng):
    for _ in range(200):
        delta = rng.uniform(3.0, 30.0) * rng.choice([-1, 1])
        gamma = rng.uniform(1e-3, 0.1)
        u = rng.uniform(-50.0, 50.0)
        p = DressingParams(delta=delta, gamma=gamma)
        d2 = u + 2 * delta
        closed = d2 * u / (4 * delta * gamma * (d2 ** 2 + gamma ** 2 + 1.0))
        assert coherence(u, p) == pytest.approx(closed, rel=1e-12)


def test_coherence_needs_decay():
    with pytest.raises(DomainError):
        coherence(-18.0, DressingParams(delta=10.0))


def test_approximate_coherence_close_to_exact():
    p = DressingParams(delta=10.0, gamma=0.01)
    for u in (-25.0, -19.0, -15.0, 10.0):
        assert approximate_coherence(u, p) == pytest.approx(coherence(u, p), rel=0.05)


def test_coherence_references(fig1_params):
    assert srd_coherence(fig1_params) == pytest.approx(2.5)
    assert peak_coherence(fig1_params) == pytest.approx(25.0)
    assert peak_coherence(fig1_params) / srd_coherence(fig1_params) == pytest.approx(10.0)


def test_srd_potential(fig1_params):
    assert srd_potential(0.0, 2.0, fig1_params) == pytest.approx(v0(fig1_params))
    assert srd_potential(2.0, 2.0, fig1_params) == pytest.approx(v0(fig1_params) / 2)
    with pytest.raises(DomainError):
        srd_potential(1.0, 0.0, fig1_params)


def test_light_shift(fig1_params):
    assert light_shift(fig1_params) == pytest.approx((10.0 - math.sqrt(101.0)) / 2)
    assert light_shift(fig1_params) == pytest.approx(light_shift_compensation(fig1_params), rel=1e-2)
    red = DressingParams(delta=-10.0)
    assert light_shift_compensation(red) == pytest.approx(0.025)
    assert light_shift(red) > 0


def test_full_potential_matches_perturbative():
    p = DressingParams(delta=10.0)
    ref = v0(p)
    for u in (-18.0, -15.0, -5.0, 40.0):
        assert abs(full_dressed_potential(u, p) - dressed_potential(u, p)) <= 0.15 * ref
    assert full_dressed_potential(0.0, p) == pytest.approx(0.0, abs=1e-15)


def test_regime_report(fig1_params):
    report = rmd_regime(fig1_params, -18.0)
    assert report.far_detuned
    assert report.off_resonant
    assert report.delta2_over_omega2 == pytest.approx(20.0)
    assert two_photon_rabi(fig1_params) == pytest.approx(0.1)
    assert not rmd_regime(fig1_params, -19.99).off_resonant
    assert DressingParams(delta=2.0).weak_dressing is False


def test_unit_conversion_round_trip():
    p = DressingParams.from_mhz(omega=2.0, delta=20.0, gamma=0.02, g=0.001)
    assert p.omega == 1.0
    assert p.delta == pytest.approx(10.0)
    back = p.to_mhz()
    assert back["delta"] == pytest.approx(20.0, rel=1e-12)
    assert back["gamma"] == pytest.approx(0.02, rel=1e-12)


def test_invalid_params():
    with pytest.raises(DomainError):
        DressingParams(omega=0.0)
    with pytest.raises(DomainError):
        DressingParams(gamma=-1.0)
    with pytest.raises(DomainError):
        DressingParams(delta=math.nan)


def test_profile_along_potential(upper_potential, fig1_params):
    profile = dressed_profile(upper_potential, fig1_params, full=True)
    n = upper_potential.r_grid.size
    assert profile.v.shape == (n,)
    assert profile.v_full.shape == (n,)
    np.testing.assert_allclose(profile.delta2, profile.u + 20.0)
    assert np.all(np.isfinite(profile.coherence))
    no_decay = dressed_profile(upper_potential, DressingParams(delta=10.0))
    assert np.all(np.isnan(no_decay.coherence))


def test_full_potential_follows_branch_through_resonance():
    p = DressingParams(delta=5.5, gamma=0.01)
    c = 1.0 / math.sqrt(2.0)
    path = np.linspace(0.0, -2 * p.delta - 3.0, 14001)
    h = np.zeros((path.size, 3, 3))
    h[:, 1, 1] = p.delta
    h[:, 2, 2] = 2 * p.delta + path
    h[:, 0, 1] = h[:, 1, 0] = h[:, 1, 2] = h[:, 2, 1] = c
    energies, vectors = np.linalg.eigh(h)
    # overlap tracking from U = 0 along a fine path
    current = int(np.argmax(np.abs(vectors[0, 0])))
    tracked = [energies[0, current]]
    for i in range(1, path.size):
        overlap = np.abs(vectors[i - 1].T @ vectors[i])
        _, cols = linear_sum_assignment(-overlap)
        current = int(cols[current])
        tracked.append(energies[i, current])
    expected = np.array(tracked) - tracked[0]

    sample = np.array([0, 9000, 10900, 11000, 11100, 12500, 14000])
    shuffled = sample[::-1]
    np.testing.assert_allclose(full_dressed_potential(path[shuffled], p), expected[shuffled], atol=1e-9)
    # continuous across the avoided crossing at U = -2 Delta
    v = full_dressed_potential(path[10500:11500], p)
    assert np.max(np.abs(np.diff(v))) < 1e-2
    # past the resonance the continued branch is no longer |11>-dominated
    assert np.abs(vectors[14000, 0, current]) ** 2 < 0.5
