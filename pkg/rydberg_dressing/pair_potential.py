# pair_potential.py
# Microwave-coupled Rydberg pair states: Hamiltonian, adiabatic curves and the molecular well.
# Energies are in 2pi*MHz, lengths in micrometres.
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, linear_sum_assignment

from .errors import DomainError, NumericError, PreconditionError
from .utils import log_grid

logger = logging.getLogger(__name__)

DEFAULT_R_MIN_UM = 0.3
DEFAULT_R_MAX_UM = 20.0
DEFAULT_POINTS = 2000
TAIL_TOLERANCE = 1e-2

# Pair channel order: |ss>, (|sp>+|ps>)/sqrt(2), |pp>
SS_CHANNEL = 0

BranchSelector = Union[str, int]


@dataclass(frozen=True)
class MwCoupling:
    """Microwave field coupling the nS and n'P Rydberg states."""
    omega_mw: float
    delta_mw: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega_mw) and math.isfinite(self.delta_mw)):
            raise DomainError("microwave parameters must be finite")
        if self.omega_mw < 0:
            raise DomainError(f"omega_mw must be >= 0, got {self.omega_mw}")


@dataclass(frozen=True)
class DispersionCoeffs:
    """Dispersion coefficients of the three pair channels."""
    c6_ss: float
    c6_pp: float
    c3_sp: float

    def __post_init__(self):
        for name in ("c6_ss", "c6_pp", "c3_sp"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    def scaled(self, strength: float = 1.0, length: float = 1.0) -> "DispersionCoeffs":
        """Multiply every coefficient by `strength` and stretch distances by `length`.

        The curves of the result at R equal the curves of the strength-scaled
        coefficients at R / length.
        """
        return DispersionCoeffs(
            c6_ss=self.c6_ss * strength * length ** 6,
            c6_pp=self.c6_pp * strength * length ** 6,
            c3_sp=self.c3_sp * strength * length ** 3,
        )


def _check_distance(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("pair distance must be positive and finite")
    return r


def build_pair_hamiltonian(r: float, mw: MwCoupling, coeffs: DispersionCoeffs) -> np.ndarray:
    """The 3x3 pair Hamiltonian at distance r."""
    r = float(_check_distance(r))
    return _stacked_hamiltonians(np.array([r]), mw, coeffs)[0]


def asymptotic_hamiltonian(mw: MwCoupling) -> np.ndarray:
    """Pair Hamiltonian with every 1/R^n term dropped."""
    return _stacked_hamiltonians(np.array([np.inf]), mw, DispersionCoeffs(0.0, 0.0, 0.0))[0]


def _stacked_hamiltonians(r: np.ndarray, mw: MwCoupling, coeffs: DispersionCoeffs) -> np.ndarray:
    with np.errstate(divide="ignore"):
        inv3 = np.where(np.isinf(r), 0.0, 1.0 / r ** 3)
    inv6 = inv3 ** 2
    coupling = mw.omega_mw / math.sqrt(2.0)
    h = np.zeros((r.size, 3, 3))
    h[:, 0, 0] = -coeffs.c6_ss * inv6
    h[:, 1, 1] = mw.delta_mw + coeffs.c3_sp * inv3
    h[:, 2, 2] = 2.0 * mw.delta_mw - coeffs.c6_pp * inv6
    h[:, 0, 1] = h[:, 1, 0] = coupling
    h[:, 1, 2] = h[:, 2, 1] = coupling
    return h


def mixing_angle(mw: MwCoupling) -> float:
    """phi = arctan(2*omega_mw / delta_mw), two-argument convention."""
    if mw.omega_mw == 0 and mw.delta_mw == 0:
        raise DomainError("mixing angle undefined when omega_mw and delta_mw are both zero")
    return math.atan2(2.0 * mw.omega_mw, mw.delta_mw)


@dataclass(frozen=True, eq=False)
class PairCurveSet:
    """Adiabatically ordered eigen-branches of the pair Hamiltonian on a distance grid.

    `branches[:, b]` is branch b; branch labels follow ascending asymptotic energy.
    """
    r_grid: np.ndarray
    branches: np.ndarray
    vectors: np.ndarray
    asymptotes: np.ndarray
    branch_of_interest: int
    mw: MwCoupling
    coeffs: DispersionCoeffs

    def branch(self, index: Optional[int] = None) -> np.ndarray:
        return self.branches[:, self.branch_of_interest if index is None else index]


def _eigh(stack: np.ndarray) -> tuple:
    try:
        return np.linalg.eigh(stack)
    except np.linalg.LinAlgError:
        # locate the first failing point for the error report
        for i, h in enumerate(stack):
            try:
                np.linalg.eigh(h)
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"eigensolver did not converge at grid point {i}", index=i) from exc
        raise


def _match(reference: np.ndarray, vectors: np.ndarray, ref_energy: np.ndarray, energy: np.ndarray) -> np.ndarray:
    """Column permutation of `vectors` that best continues `reference`."""
    overlap = np.abs(reference.T @ vectors)
    scale = max(np.ptp(energy), np.ptp(ref_energy), 1e-300)
    # energy proximity only breaks overlap ties
    cost = -overlap + 1e-6 * np.abs(ref_energy[:, None] - energy[None, :]) / scale
    _, cols = linear_sum_assignment(cost)
    return cols


def _select_branch(selector: BranchSelector, asym_vectors: np.ndarray, asymptotes: np.ndarray) -> int:
    if isinstance(selector, (int, np.integer)) and not isinstance(selector, bool):
        if not 0 <= selector < 3:
            raise DomainError(f"branch index must be 0, 1 or 2, got {selector}")
        return int(selector)
    if selector == "upper":
        return int(np.argmax(asymptotes))
    if selector == "lower":
        return int(np.argmin(asymptotes))
    if selector == "ss":
        weight = np.abs(asym_vectors[SS_CHANNEL, :]) ** 2
        best = np.flatnonzero(weight >= weight.max() - 1e-9)
        return int(best[np.argmax(asymptotes[best])])
    raise DomainError(f"unknown branch selector {selector!r}")


def eigencurves(r_grid, mw: MwCoupling, coeffs: DispersionCoeffs, branch: BranchSelector = "ss") -> PairCurveSet:
    """Diagonalize the pair Hamiltonian on r_grid and follow each branch adiabatically.

    Branches are seeded at the largest distance by their asymptotic eigenstates and
    continued inward by maximal eigenvector overlap.
    """
    r_grid = _check_distance(np.atleast_1d(r_grid))
    if r_grid.ndim != 1 or np.any(np.diff(r_grid) <= 0):
        raise PreconditionError("r_grid must be one-dimensional and strictly increasing")

    asym_energy, asym_vectors = _eigh(asymptotic_hamiltonian(mw)[None])
    asym_energy, asym_vectors = asym_energy[0], asym_vectors[0]

    energies, vectors = _eigh(_stacked_hamiltonians(r_grid, mw, coeffs))
    n = r_grid.size
    branches = np.empty((n, 3))
    tracked = np.empty((n, 3, 3))

    ref_vec, ref_energy = asym_vectors, asym_energy
    for i in range(n - 1, -1, -1):
        cols = _match(ref_vec, vectors[i], ref_energy, energies[i])
        vec = vectors[i][:, cols]
        # keep a smooth gauge
        signs = np.sign(np.sum(vec * ref_vec, axis=0))
        signs[signs == 0] = 1.0
        vec = vec * signs
        branches[i] = energies[i][cols]
        tracked[i] = vec
        ref_vec, ref_energy = vec, branches[i]

    index = _select_branch(branch, asym_vectors, asym_energy)
    logger.debug("Tracked %d grid points, branch of interest %d", n, index)
    return PairCurveSet(
        r_grid=r_grid,
        branches=branches,
        vectors=tracked,
        asymptotes=asym_energy,
        branch_of_interest=index,
        mw=mw,
        coeffs=coeffs,
    )


def _parabola_vertex(x: np.ndarray, y: np.ndarray) -> Optional[tuple]:
    x1, x2, x3 = x
    y1, y2, y3 = y
    denom = (x1 - x2) * (x1 - x3) * (x2 - x3)
    a = (x3 * (y2 - y1) + x2 * (y1 - y3) + x1 * (y3 - y2)) / denom
    b = (x3 ** 2 * (y1 - y2) + x2 ** 2 * (y3 - y1) + x1 ** 2 * (y2 - y3)) / denom
    c = (x2 * x3 * (x2 - x3) * y1 + x3 * x1 * (x3 - x1) * y2 + x1 * x2 * (x1 - x2) * y3) / denom
    if a <= 0:
        return None
    xv = -b / (2 * a)
    return xv, c - b ** 2 / (4 * a)


@dataclass(frozen=True, eq=False)
class MolecularPotential:
    """U(R) of one branch, measured from that branch's R -> infinity energy."""
    r_grid: np.ndarray
    curve: np.ndarray
    r_min: float
    u_min: float
    at_edge: bool
    branch: int
    mw: MwCoupling
    coeffs: DispersionCoeffs
    asymptote: float = 0.0
    _spline: CubicSpline = field(repr=False, compare=False, default=None)

    def at(self, r) -> np.ndarray:
        """U at arbitrary distances.

        Inside the grid: cubic spline in log R. Beyond the grid: R^-3 continuation
        of the last sample. Below the grid the branch is not tracked and a
        DomainError is raised.
        """
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(_check_distance(r))
        out = np.empty_like(r, dtype=float)
        lo, hi = self.r_grid[0], self.r_grid[-1]
        if np.any(r < lo):
            raise DomainError(f"R={float(np.min(r)):.4g} um lies below the tracked grid (R_min={lo:.4g} um)")
        inside = (r >= lo) & (r <= hi)
        out[inside] = self._spline(np.log(r[inside]))
        beyond = r > hi
        out[beyond] = self.curve[-1] * (hi / r[beyond]) ** 3
        return float(out[0]) if scalar else out


def molecular_potential(curves: PairCurveSet, tail_tolerance: float = TAIL_TOLERANCE) -> MolecularPotential:
    """U(R) = E_b(R) - E_b(inf) for the branch of interest, with a refined minimum."""
    b = curves.branch_of_interest
    if not 0 <= b < 3:
        raise PreconditionError(f"invalid branch of interest {b}")
    r = curves.r_grid
    u = curves.branches[:, b] - curves.asymptotes[b]

    i = int(np.argmin(u))
    scale = abs(u[i]) if u[i] < 0 else float(np.max(np.abs(u)))
    if r.size > 1 and abs(u[-1]) > tail_tolerance * max(scale, 1e-300):
        raise PreconditionError(
            f"potential tail not converged at R_max={r[-1]:.3g} um "
            f"(|U|={abs(u[-1]):.3g} vs scale {scale:.3g}); extend the grid to larger R"
        )

    at_edge = i == 0 or i == r.size - 1
    r_min, u_min = float(r[i]), float(u[i])
    if not at_edge:
        vertex = _parabola_vertex(r[i - 1:i + 2], u[i - 1:i + 2])
        if vertex is not None and r[i - 1] <= vertex[0] <= r[i + 1]:
            r_min, u_min = float(vertex[0]), float(min(vertex[1], u[i]))
    else:
        logger.debug("Potential minimum sits at the grid edge (R=%.4g um); no interior well", r_min)

    spline = CubicSpline(np.log(r), u) if r.size > 1 else None
    return MolecularPotential(
        r_grid=r, curve=u, r_min=r_min, u_min=u_min, at_edge=at_edge,
        branch=b, mw=curves.mw, coeffs=curves.coeffs,
        asymptote=float(curves.asymptotes[b]),
        _spline=spline,
    )


def default_grid(r_min: float = DEFAULT_R_MIN_UM, r_max: float = DEFAULT_R_MAX_UM, points: int = DEFAULT_POINTS) -> np.ndarray:
    return log_grid(r_min, r_max, points)


def calibrate_coefficients(
    mw: MwCoupling,
    shape: DispersionCoeffs,
    r_target: float,
    u_target: float,
    branch: BranchSelector = "upper",
    r_span: tuple = (0.05, 20.0),
    points: int = DEFAULT_POINTS,
) -> DispersionCoeffs:
    """Rescale `shape` so the selected branch has its minimum U(r_target) = u_target.

    Coefficient strength sets the depth (root-found); a length stretch then places
    the minimum exactly, since stretching leaves the depth unchanged.
    """
    if u_target >= 0:
        raise DomainError("calibration needs an attractive well (u_target < 0)")
    if r_target <= 0:
        raise DomainError("r_target must be positive")
    grid = log_grid(r_span[0], r_span[1], points)

    def well(log_strength: float) -> MolecularPotential:
        coeffs = shape.scaled(strength=math.exp(log_strength))
        return molecular_potential(eigencurves(grid, mw, coeffs, branch))

    def mismatch(log_strength: float) -> float:
        return well(log_strength).u_min - u_target

    lo, hi = math.log(1e-8), 0.0
    if mismatch(lo) <= 0:
        raise NumericError("calibration failed: shape produces a well even at vanishing strength")
    for _ in range(80):
        if mismatch(hi) < 0:
            break
        hi += math.log(2.0)
    else:
        raise NumericError("calibration failed: could not reach the target depth")

    log_strength = brentq(mismatch, lo, hi, xtol=1e-12)
    found = well(log_strength)
    if found.at_edge:
        raise NumericError("calibration failed: the well minimum left the calibration grid")
    stretch = r_target / found.r_min
    coeffs = shape.scaled(strength=math.exp(log_strength), length=stretch)
    logger.info(
        "Calibrated coefficients: C6ss=%.6g C6pp=%.6g C3sp=%.6g (Rc=%.4g um, U=%.4g)",
        coeffs.c6_ss, coeffs.c6_pp, coeffs.c3_sp, r_target, u_target,
    )
    return coeffs
