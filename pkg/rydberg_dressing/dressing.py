# dressing.py
# Closed-form dressed interaction, dephasing rates and coherence strength,
# plus the full three-state pair model used to check the perturbative result.
# All quantities are in internal units where the dressing Rabi frequency is 1.
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, SingularityError

logger = logging.getLogger(__name__)

WEAK_DRESSING_RATIO = 3.0
RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class DressingParams:
    """Dressing laser and decay parameters.

    `unit_mhz` is the value of one internal frequency unit in 2pi*MHz; pair
    potentials given in 2pi*MHz are divided by it before use.
    """
    omega: float = 1.0
    delta: float = 10.0
    gamma: float = 0.0
    g: float = 0.0
    delta0: float = 0.0
    unit_mhz: float = 1.0

    def __post_init__(self):
        for name in ("omega", "delta", "gamma", "g", "delta0", "unit_mhz"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.omega <= 0:
            raise DomainError(f"omega must be > 0, got {self.omega}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if self.unit_mhz <= 0:
            raise DomainError("unit_mhz must be positive")

    @classmethod
    def from_mhz(cls, omega: float, delta: float, gamma: float = 0.0, g: float = 0.0, delta0: float = 0.0) -> "DressingParams":
        """Build internal-unit parameters from values in 2pi*MHz."""
        if omega <= 0:
            raise DomainError(f"omega must be > 0, got {omega}")
        return cls(omega=1.0, delta=delta / omega, gamma=gamma / omega, g=g / omega, delta0=delta0 / omega, unit_mhz=omega)

    def to_mhz(self) -> dict:
        return {name: getattr(self, name) * self.unit_mhz for name in ("omega", "delta", "gamma", "g", "delta0")}

    @property
    def weak_dressing(self) -> bool:
        return abs(self.delta) >= WEAK_DRESSING_RATIO * self.omega


def _require_detuning(params: DressingParams):
    if params.delta == 0:
        raise DomainError("single-photon detuning delta must be nonzero")


def v0(params: DressingParams) -> float:
    """Saturated soft-core height Omega^4 / (8 Delta^3)."""
    _require_detuning(params)
    return params.omega ** 4 / (8.0 * params.delta ** 3)


def delta2(u_at_r, params: DressingParams):
    """Two-photon detuning U(R) + 2 Delta."""
    out = np.asarray(u_at_r, dtype=float) + 2.0 * params.delta
    return out if out.ndim else float(out)


def dressed_potential(u_at_r, params: DressingParams):
    """Dressed ground-state interaction V = V0 Delta2 U / (Delta2^2 + gamma^2)."""
    u = np.asarray(u_at_r, dtype=float)
    d2 = u + 2.0 * params.delta
    denom = d2 ** 2 + params.gamma ** 2
    if np.any(denom == 0):
        raise SingularityError("antiblockade resonance: Delta2 = 0 with gamma = 0")
    out = v0(params) * d2 * u / denom
    return out if out.ndim else float(out)


def gamma1(params: DressingParams) -> float:
    """Single-body dephasing rate Omega^2 gamma / (4 Delta^2)."""
    _require_detuning(params)
    return params.omega ** 2 * params.gamma / (4.0 * params.delta ** 2)


def gamma2(u_at_r, params: DressingParams):
    """Two-body dephasing rate Omega^4 gamma / (2 Delta^2 (Delta2^2 + gamma^2))."""
    _require_detuning(params)
    u = np.asarray(u_at_r, dtype=float)
    if params.gamma == 0:
        out = np.zeros_like(u)
    else:
        d2 = u + 2.0 * params.delta
        out = params.omega ** 4 * params.gamma / (2.0 * params.delta ** 2 * (d2 ** 2 + params.gamma ** 2))
    return out if out.ndim else float(out)


def coherence(u_at_r, params: DressingParams):
    """Coherence strength C = V / (2 gamma1 + gamma2)."""
    if params.gamma <= 0:
        raise DomainError("coherence strength needs gamma > 0")
    out = np.asarray(dressed_potential(u_at_r, params)) / (2.0 * gamma1(params) + np.asarray(gamma2(u_at_r, params)))
    return out if out.ndim else float(out)


def approximate_coherence(u_at_r, params: DressingParams):
    """(Omega^2 / 4 Delta gamma) Delta2 U / (Omega^2 + Delta2^2), valid for |Delta| >> Omega and small gamma."""
    if params.gamma <= 0:
        raise DomainError("coherence strength needs gamma > 0")
    _require_detuning(params)
    u = np.asarray(u_at_r, dtype=float)
    d2 = u + 2.0 * params.delta
    om2 = params.omega ** 2
    out = om2 / (4.0 * params.delta * params.gamma) * d2 * u / (om2 + d2 ** 2)
    return out if out.ndim else float(out)


def srd_coherence(params: DressingParams) -> float:
    """Soft-core reference C_s = V0 / (2 gamma1) = Omega^2 / (4 |Delta| gamma)."""
    if params.gamma <= 0:
        raise DomainError("coherence strength needs gamma > 0")
    _require_detuning(params)
    return params.omega ** 2 / (4.0 * abs(params.delta) * params.gamma)


def peak_coherence(params: DressingParams) -> float:
    """Coherence at |Delta2| = Omega in the far-detuned limit, Omega / (4 gamma)."""
    if params.gamma <= 0:
        raise DomainError("coherence strength needs gamma > 0")
    return params.omega / (4.0 * params.gamma)


def two_photon_rabi(params: DressingParams) -> float:
    """Omega2 = (sqrt(2) Omega)^2 / (2 Delta)."""
    _require_detuning(params)
    return params.omega ** 2 / params.delta


def srd_potential(r, r_c: float, params: DressingParams):
    """Soft-core dressing V0 / (1 + (r / r_c)^6)."""
    if r_c <= 0:
        raise DomainError("soft-core radius must be positive")
    x = np.asarray(r, dtype=float) / r_c
    out = v0(params) / (1.0 + x ** 6)
    return out if out.ndim else float(out)


def light_shift(params: DressingParams) -> float:
    """Exact single-atom shift of the dressed |1>: (Delta - sgn(Delta) sqrt(Delta^2 + Omega^2)) / 2."""
    _require_detuning(params)
    d = params.delta
    return 0.5 * (d - math.copysign(math.hypot(d, params.omega), d))


def light_shift_compensation(params: DressingParams) -> float:
    """Level shift of |0> that nulls the Raman detuning to second order, -Omega^2 / (4 Delta)."""
    _require_detuning(params)
    return -params.omega ** 2 / (4.0 * params.delta)


def _pair_dressing_matrices(u: np.ndarray, params: DressingParams) -> np.ndarray:
    c = params.omega / math.sqrt(2.0)
    h = np.zeros((u.size, 3, 3))
    h[:, 1, 1] = params.delta
    h[:, 2, 2] = 2.0 * params.delta + u
    h[:, 0, 1] = h[:, 1, 0] = c
    h[:, 1, 2] = h[:, 2, 1] = c
    return h


def _connected_rank(params: DressingParams) -> int:
    """Energy rank of the eigenstate with the largest |11> weight at U = 0."""
    _, vectors = np.linalg.eigh(_pair_dressing_matrices(np.zeros(1), params)[0])
    return int(np.argmax(np.abs(vectors[0])))


def _ground_branch(u: np.ndarray, params: DressingParams) -> np.ndarray:
    """Adiabatic continuation in U of the branch connected to |11> at U = 0.

    The pair matrix is tridiagonal with couplings omega / sqrt(2) > 0, so its spectrum
    is simple for every U and a continued branch keeps its energy rank. Past the
    two-photon resonance the branch therefore takes on |rr> character.
    """
    energies = np.linalg.eigvalsh(_pair_dressing_matrices(u, params))
    return energies[:, _connected_rank(params)]


def full_dressed_potential(u_at_r, params: DressingParams, resonance_tol: float = RESONANCE_TOL):
    """Dressed interaction from exact diagonalization in {|11>, |1r>_s, |rr>}.

    Energy of the branch connected to |11> minus the same branch at U = 0.
    """
    u = np.atleast_1d(np.asarray(u_at_r, dtype=float))
    d2 = u + 2.0 * params.delta
    if params.gamma == 0 and np.any(np.abs(d2) < resonance_tol):
        i = int(np.argmin(np.abs(d2)))
        raise SingularityError(f"antiblockade crossing |E - 2 Delta| = 0 at U = {u[i]:.6g}")
    shifted = _ground_branch(u, params) - _ground_branch(np.zeros(1), params)[0]
    return shifted if np.ndim(u_at_r) else float(shifted[0])


@dataclass(frozen=True)
class RegimeReport:
    """How well a point satisfies the far-detuned, off-resonant dressing conditions."""
    detuning_ratio: float
    delta2_over_omega2: float
    delta2_over_gamma: float
    far_detuned: bool
    off_resonant: bool


def rmd_regime(params: DressingParams, u_at_r: float, margin: float = WEAK_DRESSING_RATIO) -> RegimeReport:
    d2 = abs(float(delta2(u_at_r, params)))
    om2 = abs(two_photon_rabi(params))
    ratio_gamma = d2 / params.gamma if params.gamma > 0 else math.inf
    return RegimeReport(
        detuning_ratio=abs(params.delta) / params.omega,
        delta2_over_omega2=d2 / om2,
        delta2_over_gamma=ratio_gamma,
        far_detuned=abs(params.delta) >= margin * params.omega,
        off_resonant=d2 >= margin * om2 and ratio_gamma >= margin,
    )


@dataclass(frozen=True, eq=False)
class DressedProfile:
    r_grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gamma2: np.ndarray
    coherence: np.ndarray
    delta2: np.ndarray
    v_full: Optional[np.ndarray] = None


def dressed_profile(potential, params: DressingParams, r_grid=None, full: bool = False) -> DressedProfile:
    """Sample V, gamma2, C and Delta2 along a molecular potential given in 2pi*MHz."""
    r = potential.r_grid if r_grid is None else np.asarray(r_grid, dtype=float)
    u = np.asarray(potential.at(r)) / params.unit_mhz
    if params.gamma > 0:
        c = np.asarray(coherence(u, params))
    else:
        c = np.full_like(u, np.nan)
    v_full = None
    if full:
        v_full = np.asarray(full_dressed_potential(u, params))
    logger.debug("Dressed profile on %d points, min Delta2 = %.4g", r.size, float(np.min(np.abs(u + 2 * params.delta))))
    return DressedProfile(
        r_grid=r,
        u=u,
        v=np.asarray(dressed_potential(u, params)),
        gamma2=np.asarray(gamma2(u, params)),
        coherence=c,
        delta2=u + 2.0 * params.delta,
        v_full=v_full,
    )
