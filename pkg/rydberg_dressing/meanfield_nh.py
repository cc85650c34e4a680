# meanfield_nh.py
# No-jump (conditional) evolution of the dressed chain under a mean-field
# treatment of pair dephasing, and closed-form echo moments for large N.
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .config import settings
from .errors import CapacityError, DomainError
from .spin_chain import SpinChainModel, diagonal_energies
from .utils import SINGLE_SITE, all_zero_state, basis_occupations, basis_spins

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpinMoments:
    """First and second collective-spin moments; jxy is <JxJy + JyJx>."""
    jx: float
    jy: float
    jz: float
    jx2: float
    jy2: float
    jxy: float

    def scaled(self, factor: float) -> "SpinMoments":
        return SpinMoments(*(factor * v for v in (self.jx, self.jy, self.jz, self.jx2, self.jy2, self.jxy)))

    def as_dict(self) -> dict:
        return {"jx": self.jx, "jy": self.jy, "jz": self.jz, "jx2": self.jx2, "jy2": self.jy2, "jxy": self.jxy}


@dataclass(frozen=True, eq=False)
class PhaseTable:
    """phi_ij = V_ij tau / 2."""
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise DomainError("phase table must be square")
        if not np.allclose(phi, phi.T) or np.any(np.diag(phi) != 0):
            raise DomainError("phase table must be symmetric with zero diagonal")
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_couplings(cls, couplings, tau: float) -> "PhaseTable":
        return cls(np.asarray(couplings, dtype=float) * tau / 2.0)

    @property
    def n_sites(self) -> int:
        return self.phi.shape[0]

    def plus(self, i: int, j: int, k: int) -> float:
        return self.phi[i, k] + self.phi[j, k]

    def minus(self, i: int, j: int, k: int) -> float:
        return self.phi[i, k] - self.phi[j, k]


@dataclass(frozen=True, eq=False)
class MeanFieldRates:
    gamma0: float
    gamma_bar: float
    gamma_z: float
    jz_bar: float
    gamma_g: float = 0.0
    kappa_bar: Optional[np.ndarray] = None


def mean_field_rates(model: SpinChainModel, jz_bar: float) -> MeanFieldRates:
    """Gamma0, Gamma_bar and Gamma_z for a per-atom mean <Jz>/N = jz_bar."""
    if abs(jz_bar) > 0.5 + 1e-12:
        raise DomainError(f"jz_bar must lie in [-1/2, 1/2], got {jz_bar}")
    jz_bar = float(np.clip(jz_bar, -0.5, 0.5))
    n = model.n_sites
    g2 = model.gamma2_matrix
    # bulk site: both directions, displacements up to N-1
    gamma0 = 2.0 * float(np.sum(g2[0, 1:])) if n > 1 else 0.0
    gamma_bar = 0.5 * n * (model.gamma1 + gamma0 * (0.25 - jz_bar ** 2))
    gamma_z = model.gamma1 + gamma0 * (0.5 + jz_bar)
    gamma_g = 0.5 * n * model.gamma1 + 0.25 * float(np.sum(np.triu(g2, 1)))
    return MeanFieldRates(
        gamma0=gamma0, gamma_bar=gamma_bar, gamma_z=gamma_z, jz_bar=jz_bar,
        gamma_g=gamma_g, kappa_bar=model.couplings - 0.5j * g2,
    )


def _echo_jz(couplings: np.ndarray, t: float) -> float:
    return -0.5 * float(np.sum(np.prod(np.cos(couplings * t / 2.0), axis=1)))


def jz_time_average(model: SpinChainModel, tau: float) -> float:
    """(1 / N tau) int_0^tau <Jz(t)> dt along the coherent echo."""
    if tau < 0:
        raise DomainError("tau must be >= 0")
    if tau == 0:
        return -0.5
    v = model.couplings
    value, _ = quad(lambda t: _echo_jz(v, t), 0.0, tau, epsabs=1e-7 * tau, epsrel=1e-10, limit=200)
    return value / (model.n_sites * tau)


def _check_state_cap(n_sites: int, cap: Optional[int]):
    cap = settings.state_cap if cap is None else cap
    if n_sites > cap:
        raise CapacityError(f"state-vector evolution limited to {cap} sites, got {n_sites}")


def conditional_energies(model: SpinChainModel, rates: Optional[MeanFieldRates] = None) -> np.ndarray:
    """Complex diagonal of the no-jump Hamiltonian over computational basis states.

    With `rates` the pair dephasing is replaced by its mean-field form; without,
    every decay channel enters exactly.
    """
    spins = basis_spins(model.n_sites)
    energies = diagonal_energies(model, spins).astype(complex)
    if rates is not None:
        energies += spins @ (0.5 * (np.sum(model.couplings, axis=1) - 1j * rates.gamma_z))
        energies -= 0.5j * rates.gamma_bar
    else:
        occ = basis_occupations(model.n_sites)
        loss = model.gamma1 * occ.sum(axis=1) + 0.5 * np.sum((occ @ model.gamma2_matrix) * occ, axis=1)
        energies -= 0.5j * loss
    return energies


def evolve_conditional(model: SpinChainModel, psi, tau: float, rates: Optional[MeanFieldRates] = None,
                       state_cap: Optional[int] = None) -> np.ndarray:
    """exp(-i H_c tau)|psi>, unnormalized; H_c is diagonal in the z basis."""
    if tau < 0:
        raise DomainError("tau must be >= 0")
    _check_state_cap(model.n_sites, state_cap)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2 ** model.n_sites,):
        raise DomainError(f"state must have {2 ** model.n_sites} amplitudes")
    if tau == 0:
        return psi.copy()
    return psi * np.exp(-1j * conditional_energies(model, rates) * tau)


def _n_sites(psi: np.ndarray) -> int:
    n = int(round(math.log2(psi.size)))
    if 2 ** n != psi.size:
        raise DomainError("state length must be a power of two")
    return n


def _apply_site(psi: np.ndarray, op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    tensor = psi.reshape((2,) * n_sites)
    tensor = np.moveaxis(np.tensordot(op, tensor, axes=([1], [site])), 0, site)
    return tensor.reshape(-1)


def collective_rotation(psi, axis: str, angle: float) -> np.ndarray:
    """prod_k exp(-i angle J_axis^(k)) |psi>."""
    if not math.isfinite(angle):
        raise DomainError("rotation angle must be finite")
    psi = np.asarray(psi, dtype=complex)
    n = _n_sites(psi)
    sigma = 2.0 * SINGLE_SITE[axis]
    unitary = math.cos(angle / 2.0) * np.eye(2) - 1j * math.sin(angle / 2.0) * sigma
    for k in range(n):
        psi = _apply_site(psi, unitary, k, n)
    return psi


def apply_collective(psi: np.ndarray, axis: str) -> np.ndarray:
    """J_axis |psi>."""
    n = _n_sites(psi)
    op = SINGLE_SITE[axis]
    return sum(_apply_site(psi, op, k, n) for k in range(n))


def state_moments(psi) -> SpinMoments:
    """Collective moments <psi|O|psi> without normalizing psi."""
    psi = np.asarray(psi, dtype=complex)
    jx_psi = apply_collective(psi, "x")
    jy_psi = apply_collective(psi, "y")
    jz_psi = apply_collective(psi, "z")
    return SpinMoments(
        jx=float(np.vdot(psi, jx_psi).real),
        jy=float(np.vdot(psi, jy_psi).real),
        jz=float(np.vdot(psi, jz_psi).real),
        jx2=float(np.vdot(jx_psi, jx_psi).real),
        jy2=float(np.vdot(jy_psi, jy_psi).real),
        jxy=float(2.0 * np.vdot(jx_psi, jy_psi).real),
    )


def echo_state(model: SpinChainModel, tau: float, rates: Optional[MeanFieldRates] = None,
               detunings=None, state_cap: Optional[int] = None) -> np.ndarray:
    """|0...0> through pi/2, dress tau/2, pi, dress tau/2, pi/2 (pulses about x)."""
    if detunings is not None:
        model = model.with_detunings(detunings)
    _check_state_cap(model.n_sites, state_cap)
    psi = all_zero_state(model.n_sites)
    psi = collective_rotation(psi, "x", math.pi / 2)
    psi = evolve_conditional(model, psi, tau / 2.0, rates, state_cap)
    psi = collective_rotation(psi, "x", math.pi)
    psi = evolve_conditional(model, psi, tau / 2.0, rates, state_cap)
    return collective_rotation(psi, "x", math.pi / 2)


def analytic_moments(phases: PhaseTable) -> SpinMoments:
    """Post-echo moments of the coherent chain in closed form, O(N^3)."""
    phi = phases.phi
    n = phases.n_sites
    cos_phi = np.cos(phi)
    sin_phi = np.sin(phi)
    jz = -0.5 * float(np.sum(np.prod(cos_phi, axis=1)))

    jx2 = 0.25 * n
    jxy = 0.0
    idx = np.arange(n)
    for i in range(n - 1):
        js = idx[i + 1:]
        excluded = (idx[None, :] == i) | (idx[None, :] == js[:, None])
        minus = np.cos(phi[i][None, :] - phi[js])
        plus = np.cos(phi[i][None, :] + phi[js])
        row_i = np.repeat(cos_phi[i][None, :], js.size, axis=0)
        row_j = cos_phi[js]
        for block in (minus, plus, row_i, row_j):
            block[excluded] = 1.0
        jx2 += 0.25 * float(np.sum(np.prod(minus, axis=1) - np.prod(plus, axis=1)))
        jxy -= 0.5 * float(np.sum(sin_phi[i, js] * (np.prod(row_i, axis=1) + np.prod(row_j, axis=1))))

    return SpinMoments(jx=0.0, jy=0.0, jz=jz, jx2=jx2, jy2=0.25 * n, jxy=jxy)


def apply_dissipative_scaling(moments: SpinMoments, gamma_bar: float, tau: float) -> SpinMoments:
    """Multiply every first and second moment by exp(-Gamma_bar tau)."""
    if gamma_bar < 0:
        raise DomainError("gamma_bar must be >= 0")
    return moments.scaled(math.exp(-gamma_bar * tau))
