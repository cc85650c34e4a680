# lindblad.py
# Dense master-equation evolution for small systems: the dressed spin chain,
# the two-atom three-level model and its effective two-level reduction.
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .config import settings
from .dressing import DressingParams, dressed_potential, gamma1, gamma2, light_shift
from .errors import CapacityError, NumericError, PreconditionError
from .spin_chain import SpinChainModel, diagonal_energies
from .utils import JX, JY, JZ, basis_occupations, basis_spins, collective_operator

logger = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-9
POSITIVITY_TOL = 1e-8
EXPM_DIM_CAP = 16

# three-level single-atom basis order
GROUND0, GROUND1, RYDBERG = 0, 1, 2


@dataclass
class DensityState:
    """Dense density matrix."""
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise PreconditionError("state vector has zero norm")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    def check(self):
        check_density(self.matrix)
        return self


def as_density(initial) -> np.ndarray:
    if isinstance(initial, DensityState):
        return np.asarray(initial.matrix, dtype=complex)
    arr = np.asarray(initial, dtype=complex)
    if arr.ndim == 1:
        return DensityState.from_state(arr).matrix
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr
    raise PreconditionError(f"initial state must be a vector or a square matrix, got shape {arr.shape}")


def check_density(rho: np.ndarray, where: str = ""):
    """Raise NumericError unless rho has unit trace, is Hermitian and positive."""
    suffix = f" at {where}" if where else ""
    trace = np.trace(rho)
    if abs(trace - 1.0) > TRACE_TOL:
        raise NumericError(f"trace drifted to {trace.real:.12g}{suffix}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise NumericError(f"density matrix lost Hermiticity ({herm:.3g}){suffix}")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < -POSITIVITY_TOL:
        raise NumericError(f"density matrix has negative eigenvalue {lowest:.3g}{suffix}")


class Liouvillian:
    """rho' = -i[H, rho] + sum_L (L rho L^dag - {L^dag L, rho} / 2).

    Jump operators diagonal in the computational basis can be given as vectors.
    """

    def __init__(self, hamiltonian: np.ndarray, jumps: Sequence[np.ndarray] = (), diagonal_jumps: Sequence[np.ndarray] = ()):
        self.hamiltonian = np.asarray(hamiltonian, dtype=complex)
        self.dim = self.hamiltonian.shape[0]
        self.jumps = [np.asarray(j, dtype=complex) for j in jumps]
        self.diagonal_jumps = [np.asarray(j, dtype=complex) for j in diagonal_jumps]

        decay = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.jumps:
            decay += op.conj().T @ op
        self.recycle = np.zeros((self.dim, self.dim), dtype=complex)
        for vec in self.diagonal_jumps:
            decay[np.diag_indices(self.dim)] += np.abs(vec) ** 2
            self.recycle += np.outer(vec, vec.conj())
        self.h_eff = self.hamiltonian - 0.5j * decay

    @property
    def is_diagonal(self) -> bool:
        off = self.hamiltonian - np.diag(np.diag(self.hamiltonian))
        return not self.jumps and not np.any(off)

    def __call__(self, _t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(self.dim, self.dim)
        out = -1j * (self.h_eff @ rho - rho @ self.h_eff.conj().T)
        if self.diagonal_jumps:
            out += self.recycle * rho
        for op in self.jumps:
            out += op @ rho @ op.conj().T
        return out.reshape(-1)

    def diagonal_rates(self) -> np.ndarray:
        """Elementwise generator when H and every jump are diagonal."""
        e = np.diag(self.h_eff)
        return -1j * (e[:, None] - e.conj()[None, :]) + self.recycle

    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major vec(rho)."""
        eye = np.eye(self.dim)
        sup = -1j * (np.kron(self.h_eff, eye) - np.kron(eye, self.h_eff.conj()))
        for op in self.jumps:
            sup += np.kron(op, op.conj())
        if self.diagonal_jumps:
            sup += np.diag(self.recycle.reshape(-1))
        return sup


def propagate(liouvillian: Liouvillian, rho0: np.ndarray, times, integrator: str = "rk45", check: bool = True) -> np.ndarray:
    """Density matrices at each of `times`; rho0 is the state at times[0]."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise PreconditionError("times must be a non-empty increasing sequence")
    dim = liouvillian.dim
    rho0 = np.asarray(rho0, dtype=complex)
    elapsed = times - times[0]

    if liouvillian.is_diagonal:
        rates = liouvillian.diagonal_rates()
        states = rho0[None] * np.exp(rates[None] * elapsed[:, None, None])
    elif integrator == "expm":
        if dim > EXPM_DIM_CAP:
            raise CapacityError(f"expm integrator limited to dimension {EXPM_DIM_CAP}, got {dim}")
        sup = liouvillian.superoperator()
        states = np.empty((times.size, dim, dim), dtype=complex)
        vec = rho0.reshape(-1)
        cache: Dict[float, np.ndarray] = {}
        states[0] = rho0
        for i in range(1, times.size):
            dt = float(times[i] - times[i - 1])
            key = round(dt, 12)
            if key not in cache:
                cache[key] = expm(sup * dt)
            vec = cache[key] @ vec
            states[i] = vec.reshape(dim, dim)
    elif integrator == "rk45":
        if times.size == 1 or elapsed[-1] == 0:
            states = np.repeat(rho0[None], times.size, axis=0)
        else:
            sol = solve_ivp(liouvillian, (times[0], times[-1]), rho0.reshape(-1), t_eval=times,
                            method="RK45", rtol=RTOL, atol=ATOL)
            if not sol.success:
                raise NumericError(f"master-equation integration failed: {sol.message}")
            states = sol.y.T.reshape(-1, dim, dim)
    else:
        raise PreconditionError(f"unknown integrator {integrator!r}")

    if check:
        for t, rho in zip(times, states):
            check_density(rho, where=f"t={t:.6g}")
    return states


@dataclass
class ObservableSeries:
    times: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    jz_var: np.ndarray
    populations: Dict[str, np.ndarray] = field(default_factory=dict)


def expectation(states: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Tr(rho O) for a stack of density matrices."""
    return np.einsum("tij,ji->t", states, op)


def series_from_states(times, states: np.ndarray, spin_ops: Mapping[str, np.ndarray], projectors: Mapping[str, np.ndarray]) -> ObservableSeries:
    jz = expectation(states, spin_ops["z"]).real
    jz2 = expectation(states, spin_ops["z"] @ spin_ops["z"]).real
    return ObservableSeries(
        times=np.asarray(times, dtype=float),
        jx=expectation(states, spin_ops["x"]).real,
        jy=expectation(states, spin_ops["y"]).real,
        jz=jz,
        jz_var=jz2 - jz ** 2,
        populations={label: expectation(states, p).real for label, p in projectors.items()},
    )


def pair_projectors(levels: int = 2) -> Dict[str, np.ndarray]:
    """Projectors on |00>, (|01>+|10>)/sqrt(2) and |11> of two atoms with `levels` states each."""
    def ket(a, b):
        v = np.zeros(levels * levels, dtype=complex)
        v[a * levels + b] = 1.0
        return v

    sym = (ket(GROUND0, GROUND1) + ket(GROUND1, GROUND0)) / math.sqrt(2.0)
    return {
        "00": np.outer(ket(GROUND0, GROUND0), ket(GROUND0, GROUND0)),
        "01+10": np.outer(sym, sym.conj()),
        "11": np.outer(ket(GROUND1, GROUND1), ket(GROUND1, GROUND1)),
    }


def chain_hamiltonian(model: SpinChainModel, drive: bool = True) -> np.ndarray:
    """H_s = sum_k [g Jx_k + delta_k Jz_k] + sum_{k<l} V_kl Jz_k Jz_l."""
    h = np.diag(diagonal_energies(model, basis_spins(model.n_sites))).astype(complex)
    if drive and model.g != 0:
        h += model.g * collective_operator("x", model.n_sites)
    return h


def chain_jumps(model: SpinChainModel) -> list:
    """Diagonals of sqrt(gamma1)|1_k><1_k| and sqrt(gamma2_kl)|1_k 1_l><1_k 1_l|."""
    occ = basis_occupations(model.n_sites)
    jumps = []
    if model.gamma1 > 0:
        jumps.extend(math.sqrt(model.gamma1) * occ[:, k] for k in range(model.n_sites))
    for k in range(model.n_sites):
        for l in range(k + 1, model.n_sites):
            rate = model.gamma2_matrix[k, l]
            if rate > 0:
                jumps.append(math.sqrt(rate) * occ[:, k] * occ[:, l])
    return jumps


def chain_liouvillian(model: SpinChainModel, drive: bool = True) -> Liouvillian:
    return Liouvillian(chain_hamiltonian(model, drive=drive), diagonal_jumps=chain_jumps(model))


def _dense_cap(cap: Optional[int]) -> int:
    return settings.dense_cap if cap is None else cap


def evolve_master_equation(model: SpinChainModel, initial, times, integrator: str = "rk45",
                           dense_cap: Optional[int] = None,
                           projectors: Optional[Mapping[str, np.ndarray]] = None) -> ObservableSeries:
    """Lindblad evolution of the dressed chain with on-site and pair dephasing."""
    cap = _dense_cap(dense_cap)
    if model.n_sites > cap:
        raise CapacityError(f"dense master equation limited to {cap} sites, got {model.n_sites}")
    rho0 = as_density(initial)
    if rho0.shape[0] != 2 ** model.n_sites:
        raise PreconditionError(f"initial state dimension {rho0.shape[0]} does not match {model.n_sites} sites")
    logger.debug("Master equation: N=%d, %d output times, integrator=%s", model.n_sites, len(times), integrator)
    states = propagate(chain_liouvillian(model), rho0, times, integrator=integrator)
    spin_ops = {axis: collective_operator(axis, model.n_sites) for axis in "xyz"}
    if projectors is None:
        projectors = pair_projectors(2) if model.n_sites == 2 else {}
    return series_from_states(times, states, spin_ops, projectors)


def _embed(op2: np.ndarray, levels: int) -> np.ndarray:
    """Lift a qubit operator on (|0>, |1>) into a `levels`-state atom."""
    out = np.zeros((levels, levels), dtype=complex)
    out[:2, :2] = op2
    return out


def _pair_spin_ops(levels: int) -> Dict[str, np.ndarray]:
    eye = np.eye(levels)
    ops = {}
    for axis, op in (("x", JX), ("y", JY), ("z", JZ)):
        single = _embed(op, levels)
        ops[axis] = np.kron(single, eye) + np.kron(eye, single)
    return ops


def _pair_initial(initial, levels: int) -> np.ndarray:
    """'all_zero', 'x_plus', per-atom (a0, a1) amplitudes, or a full pair vector/matrix."""
    if isinstance(initial, str):
        if initial == "all_zero":
            site = [1.0, 0.0]
        elif initial == "x_plus":
            site = [1.0, 1.0]
        else:
            raise PreconditionError(f"unknown initial state {initial!r}")
        initial = [site, site]
    if not isinstance(initial, DensityState):
        arr = np.asarray(initial, dtype=complex)
        if arr.shape == (2, 2):
            atoms = []
            for amp in arr:
                vec = np.zeros(levels, dtype=complex)
                vec[:2] = amp
                atoms.append(vec)
            initial = np.kron(atoms[0], atoms[1])
    rho = as_density(initial)
    if rho.shape[0] != levels ** 2:
        raise PreconditionError(f"pair state must have dimension {levels ** 2}, got {rho.shape[0]}")
    return rho


def three_level_hamiltonian(params: DressingParams, u12: float) -> np.ndarray:
    """Two atoms in (|0>, |1>, |r>) with Rydberg pair shift U on |rr>."""
    single = np.zeros((3, 3), dtype=complex)
    single[RYDBERG, RYDBERG] = params.delta
    single[GROUND0, GROUND0] = params.delta0
    single[GROUND0, GROUND1] = single[GROUND1, GROUND0] = params.g / 2.0
    single[GROUND1, RYDBERG] = single[RYDBERG, GROUND1] = params.omega / 2.0
    eye = np.eye(3)
    rr = np.zeros((3, 3))
    rr[RYDBERG, RYDBERG] = 1.0
    return np.kron(single, eye) + np.kron(eye, single) + u12 * np.kron(rr, rr)


def evolve_three_level_pair(params: DressingParams, u12: float, initial, times, integrator: str = "expm") -> ObservableSeries:
    """Two three-level atoms with Rydberg decay |r> -> |1> at rate gamma."""
    lower = np.zeros((3, 3), dtype=complex)
    lower[GROUND1, RYDBERG] = 1.0
    eye = np.eye(3)
    jumps = []
    if params.gamma > 0:
        root = math.sqrt(params.gamma)
        jumps = [root * np.kron(lower, eye), root * np.kron(eye, lower)]
    liouvillian = Liouvillian(three_level_hamiltonian(params, u12), jumps=jumps)
    states = propagate(liouvillian, _pair_initial(initial, 3), times, integrator=integrator)
    return series_from_states(times, states, _pair_spin_ops(3), pair_projectors(3))


@dataclass(frozen=True)
class EffectivePairRates:
    v12: float
    gamma12: float
    gamma1: float
    light_shift: float


def effective_pair_rates(params: DressingParams, u12: float, include_sbd: bool = True) -> EffectivePairRates:
    return EffectivePairRates(
        v12=float(dressed_potential(u12, params)),
        gamma12=float(gamma2(u12, params)),
        gamma1=gamma1(params) if include_sbd else 0.0,
        light_shift=light_shift(params),
    )


def effective_pair_hamiltonian(params: DressingParams, rates: EffectivePairRates) -> np.ndarray:
    single = np.zeros((2, 2), dtype=complex)
    single[GROUND0, GROUND0] = params.delta0
    single[GROUND1, GROUND1] = rates.light_shift
    single[GROUND0, GROUND1] = single[GROUND1, GROUND0] = params.g / 2.0
    eye = np.eye(2)
    n1 = np.diag([0.0, 1.0])
    return np.kron(single, eye) + np.kron(eye, single) + rates.v12 * np.kron(n1, n1)


def evolve_effective_pair(params: DressingParams, u12: float, initial, times, integrator: str = "expm",
                          include_sbd: bool = True) -> ObservableSeries:
    """Two dressed two-level atoms with interaction V12 and pair dephasing gamma12."""
    rates = effective_pair_rates(params, u12, include_sbd=include_sbd)
    logger.debug("Effective pair: V12=%.4g gamma12=%.4g gamma1=%.4g", rates.v12, rates.gamma12, rates.gamma1)
    occ = basis_occupations(2)
    diagonal_jumps = []
    if rates.gamma12 > 0:
        diagonal_jumps.append(math.sqrt(rates.gamma12) * occ[:, 0] * occ[:, 1])
    if rates.gamma1 > 0:
        diagonal_jumps.extend(math.sqrt(rates.gamma1) * occ[:, k] for k in range(2))
    liouvillian = Liouvillian(effective_pair_hamiltonian(params, rates), diagonal_jumps=diagonal_jumps)
    states = propagate(liouvillian, _pair_initial(initial, 2), times, integrator=integrator)
    return series_from_states(times, states, _pair_spin_ops(2), pair_projectors(2))
