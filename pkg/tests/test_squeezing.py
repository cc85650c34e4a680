import math

import numpy as np
import pytest

from rydberg_dressing.errors import CapacityError, ContrastLossError, DomainError, PreconditionError
from rydberg_dressing.meanfield_nh import SpinMoments
from rydberg_dressing.spin_chain import SpinChainModel
from rydberg_dressing.squeezing import (
    CURVE_COLUMNS,
    EchoProtocol,
    min_variance,
    optimize_tau,
    run_echo,
    scan_scaling,
    squeeze_curves,
    squeezing_result,
    xi_squared,
)


def coherent_pair_chain(n_sites=4, coupling=1.0):
    v = coupling * (np.ones((n_sites, n_sites)) - np.eye(n_sites))
    return SpinChainModel(n_sites=n_sites, spacing=1.0, couplings=v)


def test_coherent_spin_state_has_unit_xi():
    # polarized along -z: <Jz> = -N/2 and transverse variances N/4
    m = SpinMoments(jx=0.0, jy=0.0, jz=-2.0, jx2=1.0, jy2=1.0, jxy=0.0)
    assert xi_squared(m, 4) == pytest.approx(1.0)
    theta, variance = min_variance(m)
    assert theta == 0.0
    assert variance == pytest.approx(1.0)


def test_min_variance_finds_rotated_axis():
    # variance 0.2 along the diagonal, 1.8 across it
    a, b, cov = 1.0, 1.0, 0.8
    m = SpinMoments(jx=0.0, jy=0.0, jz=-2.0, jx2=a, jy2=b, jxy=2 * cov)
    theta, variance = min_variance(m)
    assert variance == pytest.approx(0.2)
    assert theta == pytest.approx(-math.pi / 4)
    assert -math.pi / 2 <= theta < math.pi / 2


def test_min_variance_range_edge():
    m = SpinMoments(jx=0.0, jy=0.0, jz=-1.0, jx2=1.0, jy2=0.2, jxy=0.0)
    theta, variance = min_variance(m)
    assert variance == pytest.approx(0.2)
    assert theta == pytest.approx(-math.pi / 2)


def test_contrast_loss():
    m = SpinMoments(jx=0.0, jy=0.0, jz=0.0, jx2=1.0, jy2=1.0, jxy=0.0)
    with pytest.raises(ContrastLossError):
        squeezing_result(m, 4)


def test_protocol_validation():
    with pytest.raises(DomainError):
        EchoProtocol(tau=-1.0)
    with pytest.raises(DomainError):
        EchoProtocol(method="trotter")
    assert EchoProtocol().pulse_duration(0.5) == pytest.approx(math.pi)
    assert EchoProtocol().pulse_duration(0.0) == math.inf


def test_zero_dressing_time_gives_no_squeezing():
    result = run_echo(EchoProtocol(tau=0.0), coherent_pair_chain())
    assert result.xi2 == pytest.approx(1.0)


def test_methods_agree_for_coherent_chain():
    model = coherent_pair_chain(4, 0.7)
    for tau in (0.2, 0.6, 1.0):
        values = [
            run_echo(EchoProtocol(tau=tau, method=method, dissipative=False), model).xi2
            for method in ("exact_me", "conditional_nh", "analytic")
        ]
        assert max(values) - min(values) < 1e-7


def test_methods_agree_with_weak_dephasing(chain_factory):
    base = chain_factory(4, gamma1=0.002, with_tbd=True)
    model = SpinChainModel(n_sites=4, spacing=1.0, couplings=base.couplings, gamma1=0.002,
                           gamma2_matrix=0.1 * base.gamma2_matrix)
    for tau in (0.3, 0.8):
        me = run_echo(EchoProtocol(tau=tau, method="exact_me"), model).xi2
        nh = run_echo(EchoProtocol(tau=tau, method="conditional_nh"), model).xi2
        analytic = run_echo(EchoProtocol(tau=tau, method="analytic"), model).xi2
        assert nh == pytest.approx(analytic, abs=1e-9)
        assert me == pytest.approx(nh, abs=0.02)


def test_squeezing_below_one_for_short_echo():
    result = run_echo(EchoProtocol(tau=0.5, method="analytic", dissipative=False), coherent_pair_chain(6, 0.5))
    assert result.xi2 < 1.0


def test_exact_method_respects_cap():
    with pytest.raises(CapacityError):
        run_echo(EchoProtocol(tau=0.3, method="exact_me"), coherent_pair_chain(4), dense_cap=3)


def test_optimize_tau_refines_scan():
    model = coherent_pair_chain(6, 0.5)
    protocol = EchoProtocol(method="analytic", dissipative=False)
    best = optimize_tau(protocol, model, (0.05, 3.0), points=60)
    assert 0.05 <= best.tau <= 3.0
    assert best.xi2 < 1.0
    taus = np.geomspace(0.05, 3.0, 60)
    grid_best = min(run_echo(EchoProtocol(tau=t, dissipative=False), model).xi2 for t in taus)
    assert best.xi2 <= grid_best + 1e-12


def test_optimize_tau_without_squeezing():
    model = SpinChainModel(n_sites=3, spacing=1.0, couplings=np.zeros((3, 3)))
    best = optimize_tau(EchoProtocol(dissipative=False), model, (0.1, 1.0), points=10)
    assert tuple(best) == (0.0, 1.0, 0.0)


def test_optimize_tau_rejects_bad_range():
    with pytest.raises(PreconditionError):
        optimize_tau(EchoProtocol(), coherent_pair_chain(), (1.0, 0.5))
    with pytest.raises(PreconditionError):
        optimize_tau(EchoProtocol(), coherent_pair_chain(), (0.1, 1.0), points=2)


def test_squeeze_curves_columns():
    model = coherent_pair_chain(3, 0.5)
    table = squeeze_curves(model, [0.2, 0.4], dense_cap=2)
    assert list(table) == ["tau", *CURVE_COLUMNS]
    assert np.all(np.isnan(table["me"]))
    np.testing.assert_allclose(table["nh_tbd"], table["coherent"], atol=1e-9)


def test_scan_rows_follow_input_order(upper_potential, fig3_params):
    kwargs = dict(
        schemes=["rmd", "srd"], lattice_ratios=[1.0], n_list=[4, 6], gamma_list=[0.005],
        tau_range_v0=(0.01, 2.0), points=12, progress=False,
    )
    serial = scan_scaling(fig3_params, upper_potential, threads=1, **kwargs)
    parallel = scan_scaling(fig3_params, upper_potential, threads=3, **kwargs)
    assert [(r.scheme, r.n_sites) for r in serial] == [("rmd", 4), ("rmd", 6), ("srd", 4), ("srd", 6)]
    assert serial == parallel
