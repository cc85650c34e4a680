import math

import numpy as np
import pytest

from rydberg_dressing.errors import CapacityError, DomainError
from rydberg_dressing.meanfield_nh import (
    PhaseTable,
    SpinMoments,
    analytic_moments,
    apply_dissipative_scaling,
    collective_rotation,
    conditional_energies,
    echo_state,
    evolve_conditional,
    jz_time_average,
    mean_field_rates,
    state_moments,
)
from rydberg_dressing.spin_chain import SpinChainModel
from rydberg_dressing.utils import JZ, all_zero_state, collective_operator, site_operator, x_plus_state

MOMENTS = ("jx", "jy", "jz", "jx2", "jy2", "jxy")


@pytest.mark.parametrize("n_sites", [2, 3, 5, 7])
def test_analytic_moments_match_state_vector(chain_factory, n_sites):
    model = chain_factory(n_sites)
    for tau in (0.3, 1.7, 4.0):
        exact = state_moments(echo_state(model, tau))
        closed = analytic_moments(PhaseTable.from_couplings(model.couplings, tau))
        for key in MOMENTS:
            assert getattr(closed, key) == pytest.approx(getattr(exact, key), abs=1e-10), key


def test_echo_without_interaction_returns_to_start():
    model = SpinChainModel(n_sites=3, spacing=1.0, couplings=np.zeros((3, 3)))
    psi = echo_state(model, 2.0)
    # the pulses add up to a full turn about x
    assert abs(psi[0]) == pytest.approx(1.0)
    m = state_moments(psi)
    assert m.jz == pytest.approx(-1.5)


def test_echo_cancels_site_detunings(chain_factory):
    model = chain_factory(3)
    plain = state_moments(echo_state(model, 1.3))
    detuned = state_moments(echo_state(model, 1.3, detunings=[0.4, -0.2, 0.9]))
    for key in MOMENTS:
        assert getattr(detuned, key) == pytest.approx(getattr(plain, key), abs=1e-10)


def test_collective_rotation_matches_dense_operator():
    psi = x_plus_state(2) * np.exp(1j * np.arange(4))
    rotated = collective_rotation(psi, "y", 0.8)
    from scipy.linalg import expm

    dense = expm(-1j * 0.8 * collective_operator("y", 2)) @ psi
    np.testing.assert_allclose(rotated, dense, atol=1e-12)
    with pytest.raises(DomainError):
        collective_rotation(psi, "x", math.inf)


def test_state_moments_of_x_polarized_state():
    m = state_moments(x_plus_state(4))
    assert m.jx == pytest.approx(2.0)
    assert m.jz == pytest.approx(0.0, abs=1e-12)
    assert m.jy2 == pytest.approx(1.0)
    assert m.jx2 == pytest.approx(4.0)


def test_mean_field_rates(chain_factory):
    model = chain_factory(4, gamma1=0.01, with_tbd=True)
    rates = mean_field_rates(model, -0.5)
    g0 = 2 * model.gamma2_matrix[0, 1:].sum()
    assert rates.gamma0 == pytest.approx(g0)
    assert rates.gamma_bar == pytest.approx(2 * (0.01 + g0 * 0.0))
    assert rates.gamma_z == pytest.approx(0.01)
    mid = mean_field_rates(model, 0.0)
    assert mid.gamma_bar == pytest.approx(2 * (0.01 + g0 * 0.25))
    assert mid.gamma_z == pytest.approx(0.01 + 0.5 * g0)
    with pytest.raises(DomainError):
        mean_field_rates(model, 0.7)


def test_jz_time_average(chain_factory):
    model = chain_factory(3)
    assert jz_time_average(model, 0.0) == -0.5
    no_coupling = SpinChainModel(n_sites=3, spacing=1.0, couplings=np.zeros((3, 3)))
    assert jz_time_average(no_coupling, 2.0) == pytest.approx(-0.5)
    assert -0.5 <= jz_time_average(model, 3.0) <= 0.5


def test_conditional_evolution_is_diagonal_and_decaying(chain_factory):
    model = chain_factory(3, gamma1=0.1, with_tbd=True)
    psi = x_plus_state(3)
    out = evolve_conditional(model, psi, 2.0)
    norms = np.abs(out) ** 2
    assert norms[0] == pytest.approx(abs(psi[0]) ** 2)
    assert norms.sum() < 1.0
    energies = conditional_energies(model)
    # decay of |111>: three sites plus three pairs
    loss = 3 * 0.1 + model.gamma2_matrix[np.triu_indices(3, 1)].sum()
    assert -2 * energies[-1].imag == pytest.approx(loss)


def test_mean_field_energies_are_real_without_decay(chain_factory):
    model = chain_factory(3)
    rates = mean_field_rates(model, -0.5)
    np.testing.assert_allclose(conditional_energies(model).imag, 0.0)
    np.testing.assert_allclose(conditional_energies(model, rates).imag, 0.0, atol=1e-15)


def test_mean_field_echo_equals_scaled_coherent_echo(chain_factory):
    model = chain_factory(4, gamma1=0.02, with_tbd=True)
    tau = 1.1
    rates = mean_field_rates(model, jz_time_average(model, tau))
    damped = state_moments(echo_state(model, tau, rates))
    coherent = state_moments(echo_state(model.coherent(), tau))
    factor = math.exp(-rates.gamma_bar * tau)
    for key in MOMENTS:
        assert getattr(damped, key) == pytest.approx(factor * getattr(coherent, key), abs=1e-10)


def test_evolve_conditional_checks(chain_factory):
    model = chain_factory(2)
    with pytest.raises(DomainError):
        evolve_conditional(model, all_zero_state(2), -1.0)
    with pytest.raises(DomainError):
        evolve_conditional(model, all_zero_state(3), 1.0)
    with pytest.raises(CapacityError):
        echo_state(model, 1.0, state_cap=1)


def test_dissipative_scaling():
    m = SpinMoments(jx=0.1, jy=0.0, jz=-1.0, jx2=0.5, jy2=0.5, jxy=0.2)
    scaled = apply_dissipative_scaling(m, 0.5, 2.0)
    assert scaled.jz == pytest.approx(-math.exp(-1.0))
    assert scaled.jxy == pytest.approx(0.2 * math.exp(-1.0))
    with pytest.raises(DomainError):
        apply_dissipative_scaling(m, -0.1, 1.0)


def test_phase_table_validation():
    with pytest.raises(DomainError):
        PhaseTable(np.array([[0.0, 1.0], [2.0, 0.0]]))
    table = PhaseTable.from_couplings(np.array([[0.0, 2.0], [2.0, 0.0]]), 0.5)
    assert table.phi[0, 1] == pytest.approx(0.5)
    assert table.plus(0, 1, 0) == pytest.approx(0.5)


def test_mean_field_conditional_matches_dense_exponential(rng):
    n = 4
    v = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)), 1)
    g2 = np.triu(rng.uniform(0.0, 0.05, size=(n, n)), 1)
    model = SpinChainModel(n_sites=n, spacing=1.0, couplings=v + v.T, gamma1=0.02, gamma2_matrix=g2 + g2.T)
    rates = mean_field_rates(model, -0.3)
    from scipy.linalg import expm

    jz = [site_operator(JZ, j, n) for j in range(n)]
    h = -0.5j * rates.gamma_bar * np.eye(2 ** n, dtype=complex)
    for j in range(n):
        h += 0.5 * (np.sum(model.couplings[j]) - 1j * rates.gamma_z) * jz[j]
        for k in range(j + 1, n):
            h += model.couplings[j, k] * jz[j] @ jz[k]
    psi = x_plus_state(n) * np.exp(0.3j * np.arange(2 ** n))
    np.testing.assert_allclose(evolve_conditional(model, psi, 1.3, rates), expm(-1j * h * 1.3) @ psi, atol=1e-12)
