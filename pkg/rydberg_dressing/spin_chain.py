# spin_chain.py
# Finite open chain of dressed atoms: pairwise couplings and dephasing rates.
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .dressing import DressingParams, dressed_potential, gamma1, gamma2, srd_potential
from .dressing import v0 as saturated_v0
from .errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpinChainModel:
    """N sites at spacing a with couplings V_jk and dephasing rates.

    `couplings` and `gamma2_matrix` are symmetric with zero diagonal. Frequencies
    are in internal units, `spacing` in micrometres.
    """
    n_sites: int
    spacing: float
    couplings: np.ndarray
    gamma1: float = 0.0
    gamma2_matrix: Optional[np.ndarray] = None
    g: float = 0.0
    site_detunings: Optional[np.ndarray] = None
    v0: float = 1.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.n_sites
        if n < 1:
            raise DomainError("a chain needs at least one site")
        v = np.asarray(self.couplings, dtype=float)
        if v.shape != (n, n):
            raise DomainError(f"couplings must be {n}x{n}, got {v.shape}")
        g2 = np.zeros((n, n)) if self.gamma2_matrix is None else np.asarray(self.gamma2_matrix, dtype=float)
        if g2.shape != (n, n):
            raise DomainError(f"gamma2_matrix must be {n}x{n}, got {g2.shape}")
        det = np.zeros(n) if self.site_detunings is None else np.asarray(self.site_detunings, dtype=float)
        if det.shape != (n,):
            raise DomainError(f"site_detunings must have {n} entries")
        for name, m in (("couplings", v), ("gamma2_matrix", g2)):
            if not np.all(np.isfinite(m)):
                raise DomainError(f"{name} must be finite")
            if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(m)))):
                raise DomainError(f"{name} must be symmetric")
            if np.any(np.diag(m) != 0):
                raise DomainError(f"{name} must have a zero diagonal")
        if np.any(g2 < 0) or self.gamma1 < 0:
            raise DomainError("dephasing rates must be >= 0")
        object.__setattr__(self, "couplings", v)
        object.__setattr__(self, "gamma2_matrix", g2)
        object.__setattr__(self, "site_detunings", det)

    def without_sbd(self) -> "SpinChainModel":
        return replace(self, gamma1=0.0)

    def without_tbd(self) -> "SpinChainModel":
        return replace(self, gamma2_matrix=np.zeros_like(self.gamma2_matrix))

    def coherent(self) -> "SpinChainModel":
        return replace(self, gamma1=0.0, gamma2_matrix=np.zeros_like(self.gamma2_matrix))

    def with_detunings(self, detunings) -> "SpinChainModel":
        return replace(self, site_detunings=np.asarray(detunings, dtype=float))


def site_distances(n_sites: int, spacing: float) -> np.ndarray:
    """R_jk = |j - k| a."""
    idx = np.arange(n_sites)
    return np.abs(idx[:, None] - idx[None, :]) * spacing


def chain_from_interaction(
    n_sites: int,
    spacing: float,
    v_of_r: Callable,
    gamma2_of_r: Optional[Callable] = None,
    gamma1: float = 0.0,
    g: float = 0.0,
    v0: float = 1.0,
    label: str = "",
) -> SpinChainModel:
    """Sample pair functions of distance on the chain's off-diagonal distances."""
    if spacing <= 0:
        raise DomainError("lattice spacing must be positive")
    dist = site_distances(n_sites, spacing)
    off = ~np.eye(n_sites, dtype=bool)
    v = np.zeros((n_sites, n_sites))
    g2 = np.zeros((n_sites, n_sites))
    if off.any():
        v[off] = v_of_r(dist[off])
        if gamma2_of_r is not None:
            g2[off] = gamma2_of_r(dist[off])
    return SpinChainModel(
        n_sites=n_sites, spacing=spacing, couplings=v, gamma1=gamma1,
        gamma2_matrix=g2, g=g, v0=v0, label=label,
    )


def _spacing(r_c: float, lattice_ratio: Optional[float], spacing: Optional[float]) -> float:
    if spacing is not None:
        return float(spacing)
    if lattice_ratio is None or lattice_ratio <= 0:
        raise DomainError("give a positive lattice_ratio Rc/a or an explicit spacing")
    return r_c / lattice_ratio


def rmd_chain(
    params: DressingParams,
    potential,
    n_sites: int,
    lattice_ratio: Optional[float] = 1.0,
    spacing: Optional[float] = None,
    include_sbd: bool = True,
    include_tbd: bool = True,
) -> SpinChainModel:
    """Chain dressed to a molecular potential; a = Rc / lattice_ratio unless spacing is given."""
    a = _spacing(potential.r_min, lattice_ratio, spacing)

    def u_internal(r):
        return np.asarray(potential.at(r)) / params.unit_mhz

    model = chain_from_interaction(
        n_sites, a,
        v_of_r=lambda r: dressed_potential(u_internal(r), params),
        gamma2_of_r=(lambda r: gamma2(u_internal(r), params)) if include_tbd else None,
        gamma1=gamma1(params) if include_sbd else 0.0,
        g=params.g,
        v0=abs(saturated_v0(params)),
        label="rmd",
    )
    logger.debug("RMD chain N=%d a=%.4g um, nearest-neighbour V=%.4g", n_sites, a, model.couplings[0, 1] if n_sites > 1 else 0.0)
    return model


def srd_chain(
    params: DressingParams,
    n_sites: int,
    lattice_ratio: Optional[float] = 1.0,
    r_c: float = 1.0,
    spacing: Optional[float] = None,
    include_sbd: bool = True,
) -> SpinChainModel:
    """Soft-core comparison chain; two-body dephasing is absent by construction."""
    a = _spacing(r_c, lattice_ratio, spacing)
    return chain_from_interaction(
        n_sites, a,
        v_of_r=lambda r: srd_potential(r, r_c, params),
        gamma2_of_r=None,
        gamma1=gamma1(params) if include_sbd else 0.0,
        g=params.g,
        v0=abs(saturated_v0(params)),
        label="srd",
    )


def diagonal_energies(model: SpinChainModel, spins: np.ndarray) -> np.ndarray:
    """sum_k delta_k m_k + sum_{k<l} V_kl m_k m_l for every basis state (rows of `spins`)."""
    return spins @ model.site_detunings + 0.5 * np.sum((spins @ model.couplings) * spins, axis=1)
