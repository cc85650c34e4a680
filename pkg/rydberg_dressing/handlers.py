# handlers.py
# One method per CLI command: build the models a command needs from a RunConfig,
# run it and write its table.
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RunConfig, settings
from .dressing import dressed_profile, gamma1, srd_coherence, v0
from .errors import PreconditionError
from .lindblad import evolve_effective_pair, evolve_master_equation, evolve_three_level_pair
from .squeezing import CURVE_COLUMNS, EchoProtocol, optimize_tau, scan_scaling, squeeze_curves
from .storage import write_columns, write_csv, write_gnuplot
from .utils import all_zero_state, product_state, x_plus_state
from .validation import ValidationSuite

logger = logging.getLogger(__name__)

COMMANDS = ("potential", "dressed", "dynamics", "squeeze", "scan", "validate")

# preset used when a command gets neither --config nor --preset
DEFAULT_PRESETS = {
    "potential": "figS1",
    "dressed": "fig1",
    "dynamics": "fig2",
    "squeeze": "fig3",
    "scan": "fig4",
    "validate": "fig3",
}

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2


@dataclass
class CommandResult:
    summary: str
    exit_code: int = EXIT_OK
    files: List[Path] = field(default_factory=list)


class CommandHandlers:
    def __init__(self, out_dir: Optional[str] = None, threads: Optional[int] = None, progress: bool = False):
        self.out_override = out_dir
        self.threads = settings.threads if threads is None else threads
        self.progress = progress

    def _output(self, cfg: RunConfig, name: str) -> Path:
        return cfg.output_dir(self.out_override) / name

    def _plot(self, cfg: RunConfig, result: CommandResult, path: Path, x: str, ys, columns, logx: bool = False):
        if cfg.output.gnuplot:
            result.files.append(write_gnuplot(path, x, ys, columns, logx=logx))

    def potential(self, cfg: RunConfig) -> CommandResult:
        """Pair eigencurves and the molecular potential of the selected branch."""
        curves, pot = cfg.molecular_potential()
        table = {
            "R_um": curves.r_grid,
            "E1": curves.branches[:, 0],
            "E2": curves.branches[:, 1],
            "E3": curves.branches[:, 2],
            "U": pot.curve,
            "branch_index": np.full(curves.r_grid.size, pot.branch + 1, dtype=int),
        }
        meta = {
            "config": cfg.name,
            "omega_mw": cfg.mw.omega_mw,
            "delta_mw": cfg.mw.delta_mw,
            "c6_ss": curves.coeffs.c6_ss,
            "c6_pp": curves.coeffs.c6_pp,
            "c3_sp": curves.coeffs.c3_sp,
            "r_min_um": pot.r_min,
            "u_min": pot.u_min,
        }
        path = write_columns(self._output(cfg, "potential.csv"), table, meta)
        result = CommandResult(
            f"potential: branch {pot.branch + 1}, minimum U={pot.u_min:.4g} 2pi*MHz at R={pot.r_min:.4g} um -> {path}",
            files=[path],
        )
        self._plot(cfg, result, path, "R_um", ["E1", "E2", "E3"], list(table), logx=True)
        return result

    def dressed(self, cfg: RunConfig) -> CommandResult:
        """Dressed interaction, pair dephasing and coherence along the molecular potential."""
        params = cfg.dressing_params()
        _, pot = cfg.molecular_potential()
        profile = dressed_profile(pot, params, full=True)
        ref_v0 = v0(params)
        g1 = gamma1(params)
        with np.errstate(divide="ignore", invalid="ignore"):
            g_ratio = profile.gamma2 / g1 if g1 > 0 else np.full_like(profile.u, np.nan)
        c_ratio = profile.coherence / srd_coherence(params) if params.gamma > 0 else profile.coherence

        meta = {"config": cfg.name, "V0": ref_v0, "gamma1": g1, "Rc_um": pot.r_min}
        path = write_columns(self._output(cfg, "dressed.csv"), {
            "R_um": profile.r_grid,
            "V_over_V0": profile.v / ref_v0,
            "gamma2_over_gamma1": g_ratio,
            "C_over_Cs": c_ratio,
        }, meta)
        full_path = write_columns(self._output(cfg, "dressed_full.csv"), {
            "R_um": profile.r_grid,
            "U": profile.u,
            "delta2": profile.delta2,
            "V_pert_over_V0": profile.v / ref_v0,
            "V_full_over_V0": profile.v_full / ref_v0,
        }, meta)

        u_rc = float(pot.at(pot.r_min)) / params.unit_mhz
        peak = float(np.interp(pot.r_min, profile.r_grid, profile.v)) / ref_v0
        result = CommandResult(
            f"dressed: V(Rc)/V0={peak:.4g} at Rc={pot.r_min:.4g} um (Delta2={u_rc + 2 * params.delta:.4g}) -> {path}",
            files=[path, full_path],
        )
        self._plot(cfg, result, path, "R_um", ["V_over_V0", "gamma2_over_gamma1", "C_over_Cs"],
                   ["R_um", "V_over_V0", "gamma2_over_gamma1", "C_over_Cs"], logx=True)
        return result

    def _pair_u12(self, cfg: RunConfig, params) -> float:
        if cfg.dynamics.u12 is not None:
            return cfg.dynamics.u12
        _, pot = cfg.molecular_potential()
        spacing = cfg.chain.spacing_um or pot.r_min / cfg.chain.lattice_ratio
        return float(pot.at(spacing)) / params.unit_mhz

    def _initial_chain_state(self, cfg: RunConfig, n_sites: int) -> np.ndarray:
        initial = cfg.dynamics.initial
        if initial == "all_zero":
            return all_zero_state(n_sites)
        if initial == "x_plus":
            return x_plus_state(n_sites)
        if len(initial) != n_sites:
            raise PreconditionError(f"initial state lists {len(initial)} sites, chain has {n_sites}")
        return product_state(initial)

    def dynamics(self, cfg: RunConfig) -> CommandResult:
        """Driven-dissipative evolution: the dressed chain, or a two-atom pair."""
        dyn = cfg.dynamics
        params = cfg.dressing_params()
        ref_v0 = abs(v0(params))
        times = np.linspace(0.0, dyn.t_max_v0 / ref_v0, dyn.points)
        meta = {"config": cfg.name, "model": dyn.model, "V0": ref_v0, "g": params.g, "delta0": params.delta0}
        extra = {}

        if dyn.model == "chain":
            _, pot = cfg.molecular_potential() if cfg.protocol.scheme == "rmd" else (None, None)
            model = cfg.chain_model(params, pot)
            if not dyn.include_sbd:
                model = model.without_sbd()
            if not dyn.include_tbd:
                model = model.without_tbd()
            initial = self._initial_chain_state(cfg, model.n_sites)
            series = evolve_master_equation(model, initial, times, integrator=dyn.integrator)
            # reference runs without pair dephasing and without any dephasing
            for suffix, variant in (("no_tbd", model.without_tbd()), ("coherent", model.coherent())):
                ref = evolve_master_equation(variant, initial, times, integrator=dyn.integrator)
                extra.update({f"jx_{suffix}": ref.jx, f"jz_{suffix}": ref.jz, f"jz_var_{suffix}": ref.jz_var})
                extra.update({f"pop_{k}_{suffix}": v for k, v in ref.populations.items()})
            detail = f"N={model.n_sites}"
        else:
            u12 = self._pair_u12(cfg, params)
            meta["u12"] = u12
            initial = dyn.initial if isinstance(dyn.initial, str) else [list(a) for a in dyn.initial]
            if dyn.model == "three_level":
                series = evolve_three_level_pair(params, u12, initial, times)
                effective = evolve_effective_pair(params, u12, initial, times, include_sbd=dyn.include_sbd)
                diff = max(float(np.max(np.abs(series.populations[k] - effective.populations[k]))) for k in series.populations)
                meta["max_population_difference"] = diff
                extra = {f"eff_pop_{k}": v for k, v in effective.populations.items()}
                detail = f"three-level vs effective pair, max population difference {diff:.3g}"
            else:
                series = evolve_effective_pair(params, u12, initial, times, include_sbd=dyn.include_sbd)
                detail = "effective pair"

        table = {"t": series.times, "V0t": series.times * ref_v0, "jx": series.jx, "jz": series.jz, "jz_var": series.jz_var}
        table.update({f"pop_{k}": v for k, v in series.populations.items()})
        table.update(extra)
        path = write_columns(self._output(cfg, "dynamics.csv"), table, meta)
        result = CommandResult(f"dynamics: {detail}, {len(times)} samples to V0t={dyn.t_max_v0:g} -> {path}", files=[path])
        pops = [k for k in table if "pop_" in k]
        self._plot(cfg, result, path, "V0t", pops or ["jz"], list(table))
        return result

    def squeeze(self, cfg: RunConfig) -> CommandResult:
        """xi^2 against the dressing time for all four evolution levels, plus the optimum."""
        proto = cfg.protocol
        params = cfg.dressing_params()
        pot = cfg.molecular_potential()[1] if proto.scheme == "rmd" else None
        model = cfg.chain_model(params, pot)
        lo, hi = proto.tau_range
        taus = np.geomspace(lo, hi, proto.curve_points) / model.v0
        curves = squeeze_curves(model, taus, scheme=proto.scheme)

        protocol = EchoProtocol(scheme=proto.scheme, method=proto.method, lattice_ratio=cfg.chain.lattice_ratio)
        best = optimize_tau(protocol, model, (lo / model.v0, hi / model.v0), points=proto.points)
        meta = {
            "config": cfg.name,
            "N": model.n_sites,
            "scheme": proto.scheme,
            "method": proto.method,
            "V0": model.v0,
            "pulse_duration": protocol.pulse_duration(params.g),
            "xi2_min": best.xi2,
            "V0tau_min": best.tau * model.v0,
            "theta_star": best.theta_star,
        }
        table = {"V0tau": curves["tau"] * model.v0}
        table.update({f"xi2_{name}": curves[name] for name in CURVE_COLUMNS})
        path = write_columns(self._output(cfg, "squeeze.csv"), table, meta)
        result = CommandResult(
            f"squeeze: N={model.n_sites} {proto.scheme}/{proto.method} xi2_min={best.xi2:.4g} at V0tau={best.tau * model.v0:.4g} -> {path}",
            files=[path],
        )
        self._plot(cfg, result, path, "V0tau", [c for c in table if c != "V0tau"], list(table), logx=True)
        return result

    def scan(self, cfg: RunConfig) -> CommandResult:
        """Optimal squeezing over scheme, Rc/a, N and gamma."""
        sc = cfg.scan
        params = cfg.dressing_params()
        _, pot = cfg.molecular_potential()
        rows = scan_scaling(
            params, pot, sc.schemes, sc.lattice_ratios, sc.n_list, sc.gamma_list,
            tau_range_v0=sc.tau_range, points=sc.points, threads=self.threads, progress=self.progress,
        )
        columns = ["scheme", "Rc_over_a", "N", "gamma", "xi2_min", "V0tau_min"]
        path = write_csv(
            self._output(cfg, "scan.csv"), columns,
            [(r.scheme, r.lattice_ratio, r.n_sites, r.gamma, r.xi2_min, r.v0_tau_min) for r in rows],
            {"config": cfg.name, "Rc_um": pot.r_min},
        )
        best = min(rows, key=lambda r: r.xi2_min) if rows else None
        detail = f"best xi2_min={best.xi2_min:.4g} ({best.scheme}, Rc/a={best.lattice_ratio:g}, N={best.n_sites})" if best else "no rows"
        return CommandResult(f"scan: {len(rows)} rows, {detail} -> {path}", files=[path])

    def validate(self, cfg: RunConfig) -> CommandResult:
        """Acceptance checks; exit code 2 if any fails."""
        results = ValidationSuite(threads=self.threads, progress=self.progress).run()
        path = write_csv(
            self._output(cfg, "validate.csv"), ["check", "passed", "value", "detail"],
            [(r.name, r.passed, r.value, r.detail) for r in results],
        )
        failed = [r.name for r in results if not r.passed]
        for r in results:
            log = logger.info if r.passed else logger.error
            log("%s %s: %s", "PASS" if r.passed else "FAIL", r.name, r.detail)
        if failed:
            return CommandResult(f"validate: {len(failed)}/{len(results)} checks failed ({', '.join(failed)}) -> {path}",
                                 exit_code=EXIT_VALIDATION, files=[path])
        return CommandResult(f"validate: all {len(results)} checks passed -> {path}", files=[path])


def run_command(name: str, cfg: RunConfig, out_dir: Optional[str] = None, threads: Optional[int] = None,
                progress: bool = False) -> CommandResult:
    if name not in COMMANDS:
        raise PreconditionError(f"unknown command {name!r}")
    handlers = CommandHandlers(out_dir=out_dir, threads=threads, progress=progress)
    logger.debug("Running %s with config %s", name, cfg.name)
    return getattr(handlers, name)(cfg)
