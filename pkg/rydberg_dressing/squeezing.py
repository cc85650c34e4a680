# squeezing.py
# Spin-echo squeezing: Wineland parameter, the echo sequence at three levels
# of fidelity, dressing-time optimisation and the N / lattice-constant scans.
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import reduce
from typing import Iterable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar
from tqdm import tqdm

from .config import settings
from .dressing import DressingParams
from .errors import CapacityError, ContrastLossError, DomainError, PreconditionError
from .lindblad import chain_liouvillian, propagate
from .meanfield_nh import (
    PhaseTable,
    SpinMoments,
    analytic_moments,
    apply_dissipative_scaling,
    echo_state,
    jz_time_average,
    mean_field_rates,
    state_moments,
)
from .spin_chain import SpinChainModel, rmd_chain, srd_chain
from .utils import JX, collective_operator

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 400
GOLDEN_TOL = 1e-3

Scheme = Literal["rmd", "srd"]
Method = Literal["exact_me", "conditional_nh", "analytic"]


@dataclass(frozen=True)
class EchoProtocol:
    """pi/2 - dress tau/2 - pi - dress tau/2 - pi/2, pulses instantaneous."""
    tau: float = 0.0
    scheme: Scheme = "rmd"
    method: Method = "analytic"
    lattice_ratio: float = 1.0
    include_sbd: bool = True
    include_tbd: bool = True
    dissipative: bool = True

    def __post_init__(self):
        if not self.tau >= 0:
            raise DomainError(f"tau must be >= 0, got {self.tau}")
        if self.method not in ("exact_me", "conditional_nh", "analytic"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.scheme not in ("rmd", "srd"):
            raise DomainError(f"unknown scheme {self.scheme!r}")

    def pulse_duration(self, g: float) -> float:
        """t_pi/2 = pi / (2 g); reported only, pulses are not simulated."""
        return math.inf if g == 0 else math.pi / (2.0 * abs(g))


@dataclass(frozen=True)
class SqueezingResult:
    xi2: float
    theta_star: float
    moments: SpinMoments
    gamma_bar: float
    tau: float


class TauOptimum(NamedTuple):
    tau: float
    xi2: float
    theta_star: float


def min_variance(moments: SpinMoments) -> Tuple[float, float]:
    """Smallest variance of cos(t) Jx + sin(t) Jy and the angle reaching it.

    The angle lies in [-pi/2, pi/2); an isotropic plane gives 0.
    """
    a = moments.jx2 - moments.jx ** 2
    b = moments.jy2 - moments.jy ** 2
    c = 0.5 * moments.jxy - moments.jx * moments.jy
    half_diff = 0.5 * (a - b)
    radius = math.hypot(half_diff, c)
    variance = 0.5 * (a + b) - radius
    if radius <= 1e-15 * max(1.0, abs(a) + abs(b)):
        return 0.0, variance
    theta = 0.5 * math.atan2(-c, -half_diff)
    if theta >= math.pi / 2:
        theta -= math.pi
    return theta, variance


def xi_squared(moments: SpinMoments, n_sites: int) -> float:
    """N (Delta J_perp)^2_min / |<J>|^2."""
    return squeezing_result(moments, n_sites).xi2


def squeezing_result(moments: SpinMoments, n_sites: int, gamma_bar: float = 0.0, tau: float = 0.0) -> SqueezingResult:
    theta, variance = min_variance(moments)
    mean_sq = moments.jx ** 2 + moments.jy ** 2 + moments.jz ** 2
    if not mean_sq > 1e-300:
        raise ContrastLossError("mean spin vanished; squeezing parameter undefined")
    return SqueezingResult(xi2=n_sites * variance / mean_sq, theta_star=theta, moments=moments, gamma_bar=gamma_bar, tau=tau)


def _effective_model(protocol: EchoProtocol, model: SpinChainModel) -> SpinChainModel:
    if not protocol.dissipative:
        return model.coherent()
    if protocol.scheme == "srd" or not protocol.include_tbd:
        model = model.without_tbd()
    if not protocol.include_sbd:
        model = model.without_sbd()
    return model


def _dense_rotation(n_sites: int, angle: float) -> np.ndarray:
    single = expm(-1j * angle * JX)
    return reduce(np.kron, [single] * n_sites)


def _master_equation_moments(model: SpinChainModel, tau: float, dense_cap: Optional[int]) -> SpinMoments:
    cap = settings.dense_cap if dense_cap is None else dense_cap
    n = model.n_sites
    if n > cap:
        raise CapacityError(f"exact master-equation echo limited to {cap} sites, got {n}")
    dim = 2 ** n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    half_pi = _dense_rotation(n, math.pi / 2)
    full_pi = half_pi @ half_pi
    liouvillian = chain_liouvillian(model, drive=False)

    rho = half_pi @ rho @ half_pi.conj().T
    rho = propagate(liouvillian, rho, [0.0, tau / 2.0])[-1]
    rho = full_pi @ rho @ full_pi.conj().T
    rho = propagate(liouvillian, rho, [0.0, tau / 2.0])[-1]
    rho = half_pi @ rho @ half_pi.conj().T

    jx, jy, jz = (collective_operator(axis, n) for axis in "xyz")

    def mean(op):
        return float(np.real(np.trace(rho @ op)))

    return SpinMoments(jx=mean(jx), jy=mean(jy), jz=mean(jz), jx2=mean(jx @ jx), jy2=mean(jy @ jy), jxy=mean(jx @ jy + jy @ jx))


def run_echo(protocol: EchoProtocol, model: SpinChainModel, dense_cap: Optional[int] = None,
             state_cap: Optional[int] = None) -> SqueezingResult:
    """Squeezing after the echo sequence with the protocol's method."""
    tau = protocol.tau
    effective = _effective_model(protocol, model)
    gamma_bar = 0.0

    if protocol.method == "analytic":
        moments = analytic_moments(PhaseTable.from_couplings(effective.couplings, tau))
        if protocol.dissipative:
            rates = mean_field_rates(effective, jz_time_average(effective, tau))
            gamma_bar = rates.gamma_bar
            moments = apply_dissipative_scaling(moments, gamma_bar, tau)
    elif protocol.method == "conditional_nh":
        rates = None
        if protocol.dissipative:
            rates = mean_field_rates(effective, jz_time_average(effective, tau))
            gamma_bar = rates.gamma_bar
        moments = state_moments(echo_state(effective, tau, rates, state_cap=state_cap))
    else:
        moments = _master_equation_moments(effective, tau, dense_cap)

    return squeezing_result(moments, model.n_sites, gamma_bar=gamma_bar, tau=tau)


def optimize_tau(protocol: EchoProtocol, model: SpinChainModel, tau_range: Tuple[float, float],
                 points: int = DEFAULT_POINTS, dense_cap: Optional[int] = None,
                 state_cap: Optional[int] = None) -> TauOptimum:
    """Global minimum of xi^2(tau): log-spaced scan, then golden-section refinement.

    Returns (0, 1, 0) when no sampled tau squeezes below 1.
    """
    lo, hi = (float(x) for x in tau_range)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise PreconditionError(f"tau range must satisfy 0 < lo < hi, got {tau_range}")
    if points < 3:
        raise PreconditionError("need at least three scan points")

    def xi2_at(tau: float) -> float:
        try:
            return run_echo(replace(protocol, tau=float(tau)), model, dense_cap, state_cap).xi2
        except ContrastLossError:
            return math.inf

    taus = np.geomspace(lo, hi, points)
    values = np.array([xi2_at(t) for t in taus])
    i = int(np.argmin(values))
    if not values[i] < 1.0:
        logger.debug("No squeezing below 1 in tau range %s", tau_range)
        return TauOptimum(0.0, 1.0, 0.0)

    best_tau, best = float(taus[i]), float(values[i])
    if 0 < i < points - 1:
        try:
            refined = minimize_scalar(xi2_at, bracket=(taus[i - 1], taus[i], taus[i + 1]), method="golden", tol=GOLDEN_TOL)
            if refined.fun < best and lo <= refined.x <= hi:
                best_tau, best = float(refined.x), float(refined.fun)
        except ValueError:
            # flat neighbourhood, keep the grid point
            pass
    theta = run_echo(replace(protocol, tau=best_tau), model, dense_cap, state_cap).theta_star
    return TauOptimum(best_tau, best, theta)


CURVE_COLUMNS = ("me", "nh_tbd", "nh_no_tbd", "coherent")


def squeeze_curves(model: SpinChainModel, taus: Sequence[float], scheme: Scheme = "rmd",
                   dense_cap: Optional[int] = None, state_cap: Optional[int] = None) -> dict:
    """xi^2(tau) for the master equation, conditional evolution with and without
    pair dephasing, and the coherent chain. Columns beyond a size cap are NaN."""
    d_cap = settings.dense_cap if dense_cap is None else dense_cap
    s_cap = settings.state_cap if state_cap is None else state_cap
    protocols = {
        "me": EchoProtocol(scheme=scheme, method="exact_me"),
        "nh_tbd": EchoProtocol(scheme=scheme, method="conditional_nh"),
        "nh_no_tbd": EchoProtocol(scheme=scheme, method="conditional_nh", include_tbd=False),
        "coherent": EchoProtocol(scheme=scheme, method="analytic", dissipative=False),
    }
    available = {
        "me": model.n_sites <= d_cap,
        "nh_tbd": model.n_sites <= s_cap,
        "nh_no_tbd": model.n_sites <= s_cap,
        "coherent": True,
    }
    table = {"tau": np.asarray(taus, dtype=float)}
    for name in CURVE_COLUMNS:
        column = np.full(len(taus), np.nan)
        if available[name]:
            for k, tau in enumerate(taus):
                try:
                    column[k] = run_echo(replace(protocols[name], tau=float(tau)), model, d_cap, s_cap).xi2
                except ContrastLossError:
                    column[k] = np.nan
        else:
            logger.info("Skipping %s curve: N=%d exceeds its size cap", name, model.n_sites)
        table[name] = column
    return table


@dataclass(frozen=True)
class ScanRow:
    scheme: str
    lattice_ratio: float
    n_sites: int
    gamma: float
    xi2_min: float
    v0_tau_min: float


def scan_scaling(
    params: DressingParams,
    potential,
    schemes: Iterable[str],
    lattice_ratios: Iterable[float],
    n_list: Iterable[int],
    gamma_list: Iterable[float],
    tau_range_v0: Tuple[float, float] = (1e-3, 5.0),
    points: int = 60,
    threads: Optional[int] = None,
    progress: bool = True,
) -> List[ScanRow]:
    """Optimal squeezing over (scheme, Rc/a, N, gamma) with the analytic method.

    Soft-core rows use V0 / (1 + (R/Rc)^6) with the same V0 and no pair dephasing.
    Row order follows the input order for any thread count.
    """
    grid_points = [(s, float(r), int(n), float(g)) for s in schemes for r in lattice_ratios for n in n_list for g in gamma_list]
    r_c = potential.r_min if potential is not None else 1.0

    def run(point) -> ScanRow:
        scheme, ratio, n, gamma = point
        p = replace(params, gamma=gamma)
        if scheme == "rmd":
            if potential is None:
                raise PreconditionError("RMD scan rows need a molecular potential")
            model = rmd_chain(p, potential, n, lattice_ratio=ratio)
        else:
            model = srd_chain(p, n, lattice_ratio=ratio, r_c=r_c)
        v0 = model.v0
        protocol = EchoProtocol(scheme=scheme, method="analytic", lattice_ratio=ratio)
        best = optimize_tau(protocol, model, (tau_range_v0[0] / v0, tau_range_v0[1] / v0), points=points)
        logger.debug("scan %s Rc/a=%g N=%d gamma=%g -> xi2=%.4g", scheme, ratio, n, gamma, best.xi2)
        return ScanRow(scheme, ratio, n, gamma, best.xi2, best.tau * v0)

    workers = settings.threads if threads is None else threads
    bar = tqdm(total=len(grid_points), desc="scan", disable=not progress)
    rows: List[ScanRow] = []
    try:
        if workers <= 1:
            for point in grid_points:
                rows.append(run(point))
                bar.update()
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(run, grid_points):
                    rows.append(row)
                    bar.update()
    finally:
        bar.close()
    return rows
