# utils.py
# Spin-1/2 operators, product states, grids and number formatting shared by the modules.
# Site ordering follows np.kron: site 0 is the most significant bit of a basis index.
# Single-site basis is (|0>, |1>) with |1> the spin-up state.
from functools import reduce
from typing import Sequence

import numpy as np

JX = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
JY = 0.5 * np.array([[0, 1j], [-1j, 0]], dtype=complex)
JZ = 0.5 * np.array([[-1, 0], [0, 1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)

SINGLE_SITE = {"x": JX, "y": JY, "z": JZ}


def site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Embed a single-site operator at `site` in an n-site chain."""
    eye = np.eye(op.shape[0], dtype=complex)
    factors = [op if k == site else eye for k in range(n_sites)]
    return reduce(np.kron, factors)


def collective_operator(axis: str, n_sites: int) -> np.ndarray:
    """Dense J_axis = sum_k J_axis^(k)."""
    op = SINGLE_SITE[axis]
    return sum(site_operator(op, k, n_sites) for k in range(n_sites))


def basis_spins(n_sites: int) -> np.ndarray:
    """m_k = +-1/2 for every computational basis state, shape (2**n, n)."""
    idx = np.arange(2 ** n_sites)
    bits = (idx[:, None] >> np.arange(n_sites - 1, -1, -1)[None, :]) & 1
    return bits - 0.5


def basis_occupations(n_sites: int) -> np.ndarray:
    """Occupation of |1> per site for every basis state, shape (2**n, n)."""
    return basis_spins(n_sites) + 0.5


def product_state(amplitudes: Sequence[Sequence[complex]]) -> np.ndarray:
    """Normalized product state from per-site (a0, a1) amplitudes."""
    sites = []
    for pair in amplitudes:
        vec = np.asarray(pair, dtype=complex)
        norm = np.linalg.norm(vec)
        if vec.shape != (2,) or norm == 0:
            raise ValueError(f"site amplitudes must be two numbers, not all zero: {pair!r}")
        sites.append(vec / norm)
    return reduce(np.kron, sites)


def all_zero_state(n_sites: int) -> np.ndarray:
    """|0...0>."""
    psi = np.zeros(2 ** n_sites, dtype=complex)
    psi[0] = 1.0
    return psi


def x_plus_state(n_sites: int) -> np.ndarray:
    """Product of (|0> + |1>)/sqrt(2) on every site."""
    return np.full(2 ** n_sites, 2 ** (-n_sites / 2), dtype=complex)


def log_grid(r_min: float, r_max: float, points: int) -> np.ndarray:
    """Log-spaced grid including both ends."""
    return np.geomspace(r_min, r_max, points)


def format_float(value: float) -> str:
    """Fixed 12-significant-digit scientific notation."""
    return f"{float(value):.11e}"
