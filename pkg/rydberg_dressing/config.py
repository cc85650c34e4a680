# config.py
# Environment settings (.env) and the validated JSON run configuration.
import functools
import json
import logging
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dressing import DressingParams, light_shift_compensation, v0
from .errors import ConfigError
from .pair_potential import DispersionCoeffs, MwCoupling, calibrate_coefficients, eigencurves, molecular_potential
from .spin_chain import rmd_chain, srd_chain
from .utils import log_grid

logger = logging.getLogger(__name__)

# Load the environment variables from the .env file.
load_dotenv()

PRESETS = ("fig1", "fig2", "fig3", "fig3_delta10", "fig4", "figS1", "figS2")


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"{name} must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    threads: int = 1
    log_level: str = "INFO"
    output_dir: str = "results"
    dense_cap: int = 8
    state_cap: int = 20


def load_settings() -> Settings:
    """Read RYD_* environment variables."""
    return Settings(
        threads=_int_env("RYD_SEED_THREADS", 1),
        log_level=os.getenv("RYD_LOG_LEVEL", "INFO").strip().upper() or "INFO",
        output_dir=os.getenv("RYD_OUTPUT_DIR", "results").strip() or "results",
        dense_cap=_int_env("RYD_DENSE_CAP", 8),
        state_cap=_int_env("RYD_STATE_CAP", 20),
    )


settings = load_settings()


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DressingSection(StrictModel):
    omega: float = Field(1.0, gt=0, allow_inf_nan=False)
    delta: float = Field(10.0, allow_inf_nan=False)
    gamma: float = Field(0.0, ge=0, allow_inf_nan=False)
    g: Optional[float] = Field(None, allow_inf_nan=False)
    g_over_v0: Optional[float] = Field(None, allow_inf_nan=False)
    delta0: float = Field(0.0, allow_inf_nan=False)
    delta0_compensate: bool = False
    unit_mhz: float = Field(1.0, gt=0, allow_inf_nan=False)

    @field_validator("delta")
    @classmethod
    def check_detuning(cls, value: float) -> float:
        if value == 0:
            raise ValueError("delta must be nonzero")
        return value


class MwSection(StrictModel):
    omega_mw: float = Field(0.0, ge=0, allow_inf_nan=False)
    delta_mw: float = Field(0.0, allow_inf_nan=False)


class CalibrateSection(StrictModel):
    r_c_um: float = Field(gt=0, allow_inf_nan=False)
    delta2_at_rc: float = Field(allow_inf_nan=False)
    branch: Union[int, Literal["ss", "upper", "lower"]] = "upper"


class CoeffsSection(StrictModel):
    c6_ss: float = Field(1.0, allow_inf_nan=False)
    c6_pp: float = Field(-2.0, allow_inf_nan=False)
    c3_sp: float = Field(-1.0, allow_inf_nan=False)
    calibrate: Optional[CalibrateSection] = None


class GridSection(StrictModel):
    r_min_um: float = Field(0.3, gt=0)
    r_max_um: float = Field(20.0, gt=0)
    points: int = Field(2000, ge=1)
    branch: Union[int, Literal["ss", "upper", "lower"]] = "ss"

    @model_validator(mode="after")
    def check_order(self):
        if self.r_max_um <= self.r_min_um:
            raise ValueError("r_max_um must exceed r_min_um")
        return self


class ChainSection(StrictModel):
    n_sites: int = Field(10, ge=1)
    lattice_ratio: float = Field(1.0, gt=0)
    spacing_um: Optional[float] = Field(None, gt=0)


Scheme = Literal["rmd", "srd"]
Method = Literal["exact_me", "conditional_nh", "analytic"]


def _positive_range(value: Tuple[float, float]) -> Tuple[float, float]:
    lo, hi = value
    if not (0 < lo < hi):
        raise ValueError("tau_range must satisfy 0 < lo < hi")
    return value


class ProtocolSection(StrictModel):
    scheme: Scheme = "rmd"
    method: Method = "analytic"
    # in units of |V0| tau
    tau_range: Tuple[float, float] = (1e-3, 2.0)
    points: int = Field(400, ge=3)
    curve_points: int = Field(121, ge=2)

    @field_validator("tau_range")
    @classmethod
    def check_tau_range(cls, value):
        return _positive_range(value)


class DynamicsSection(StrictModel):
    model: Literal["chain", "three_level", "effective_pair"] = "chain"
    t_max_v0: float = Field(10.0, gt=0)
    points: int = Field(201, ge=2)
    initial: Union[Literal["all_zero", "x_plus"], List[Tuple[float, float]]] = "x_plus"
    u12: Optional[float] = None
    include_sbd: bool = True
    include_tbd: bool = True
    integrator: Literal["rk45", "expm"] = "rk45"


class ScanSection(StrictModel):
    schemes: List[Scheme] = ["rmd", "srd"]
    lattice_ratios: List[float] = [1.0, 2.0, 3.0]
    n_list: List[int] = [10, 20, 50, 100, 150, 200]
    gamma_list: List[float] = [0.005]
    points: int = Field(60, ge=3)
    tau_range: Tuple[float, float] = (1e-3, 5.0)

    @field_validator("tau_range")
    @classmethod
    def check_tau_range(cls, value):
        return _positive_range(value)


class OutputSection(StrictModel):
    path: Optional[str] = None
    format: Literal["csv"] = "csv"
    gnuplot: bool = False


class RunConfig(StrictModel):
    """One run's parameters. Dressing values are stored in internal units (Omega = 1 unit)."""
    name: str = "custom"
    units: Literal["omega", "mhz_2pi"] = "omega"
    source_units: Literal["omega", "mhz_2pi"] = "omega"
    dressing: DressingSection = Field(default_factory=DressingSection)
    mw: MwSection = Field(default_factory=MwSection)
    coeffs: CoeffsSection = Field(default_factory=CoeffsSection)
    grid: GridSection = Field(default_factory=GridSection)
    chain: ChainSection = Field(default_factory=ChainSection)
    protocol: ProtocolSection = Field(default_factory=ProtocolSection)
    dynamics: DynamicsSection = Field(default_factory=DynamicsSection)
    scan: ScanSection = Field(default_factory=ScanSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="before")
    @classmethod
    def to_internal_units(cls, data):
        if not isinstance(data, dict) or data.get("units") != "mhz_2pi":
            return data
        data = dict(data)
        section = dict(data.get("dressing") or {})
        omega = section.get("omega", 1.0)
        if not isinstance(omega, (int, float)) or omega <= 0:
            raise ValueError("dressing.omega must be a positive number")
        for key in ("delta", "gamma", "g", "delta0"):
            if isinstance(section.get(key), (int, float)):
                section[key] = section[key] / omega
        section["omega"] = 1.0
        section["unit_mhz"] = float(omega)
        data["dressing"] = section
        data["units"] = "omega"
        data["source_units"] = "mhz_2pi"
        return data

    def reported_dressing(self) -> dict:
        """Dressing values in the units they were given in."""
        d = self.dressing
        scale = d.unit_mhz if self.source_units == "mhz_2pi" else 1.0
        out = {key: getattr(d, key) * scale for key in ("omega", "delta", "gamma", "delta0")}
        out["g"] = None if d.g is None else d.g * scale
        return out

    def dressing_params(self):
        """Internal-unit DressingParams with g and delta0 resolved."""
        d = self.dressing
        base = DressingParams(omega=d.omega, delta=d.delta, gamma=d.gamma, g=0.0, delta0=d.delta0, unit_mhz=d.unit_mhz)
        g = d.g
        if g is None:
            g = (d.g_over_v0 or 0.0) * abs(v0(base))
        delta0 = light_shift_compensation(base) if d.delta0_compensate else d.delta0
        return DressingParams(omega=d.omega, delta=d.delta, gamma=d.gamma, g=g, delta0=delta0, unit_mhz=d.unit_mhz)

    def output_dir(self, override: Optional[str] = None) -> Path:
        return Path(override or self.output.path or settings.output_dir)

    def mw_coupling(self) -> MwCoupling:
        return MwCoupling(omega_mw=self.mw.omega_mw, delta_mw=self.mw.delta_mw)

    def dispersion_coeffs(self) -> DispersionCoeffs:
        """Coefficients from the config, rescaled first when a calibration target is set."""
        c = self.coeffs
        if c.calibrate is None:
            return DispersionCoeffs(c6_ss=c.c6_ss, c6_pp=c.c6_pp, c3_sp=c.c3_sp)
        # U(Rc) = delta2_at_rc - 2 delta, converted to 2pi MHz
        u_target = (c.calibrate.delta2_at_rc - 2.0 * self.dressing.delta) * self.dressing.unit_mhz
        return _calibrated(
            self.mw.omega_mw, self.mw.delta_mw, c.c6_ss, c.c6_pp, c.c3_sp,
            c.calibrate.r_c_um, u_target, c.calibrate.branch,
        )

    def pair_curves(self):
        grid = log_grid(self.grid.r_min_um, self.grid.r_max_um, self.grid.points)
        return eigencurves(grid, self.mw_coupling(), self.dispersion_coeffs(), self.grid.branch)

    def molecular_potential(self):
        """(curves, potential) for the configured grid and branch."""
        curves = self.pair_curves()
        return curves, molecular_potential(curves)

    def chain_model(self, params: DressingParams, potential=None, scheme: Optional[str] = None,
                    n_sites: Optional[int] = None, lattice_ratio: Optional[float] = None):
        """Spin chain for the configured scheme; soft-core chains use Rc from the potential when given."""
        scheme = scheme or self.protocol.scheme
        n = n_sites or self.chain.n_sites
        ratio = lattice_ratio or self.chain.lattice_ratio
        spacing = self.chain.spacing_um
        if scheme == "rmd":
            if potential is None:
                raise ConfigError("an RMD chain needs a molecular potential")
            return rmd_chain(params, potential, n, lattice_ratio=ratio, spacing=spacing)
        r_c = potential.r_min if potential is not None else 1.0
        return srd_chain(params, n, lattice_ratio=ratio, r_c=r_c, spacing=spacing)


@functools.lru_cache(maxsize=16)
def _calibrated(omega_mw, delta_mw, c6_ss, c6_pp, c3_sp, r_c_um, u_target, branch) -> DispersionCoeffs:
    shape = DispersionCoeffs(c6_ss=c6_ss, c6_pp=c6_pp, c3_sp=c3_sp)
    return calibrate_coefficients(MwCoupling(omega_mw=omega_mw, delta_mw=delta_mw), shape, r_c_um, u_target, branch=branch)


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_validation(exc)}") from exc


def load_config(path) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text, source=str(path))
    logger.debug("Loaded config %s (%s)", path, cfg.name)
    return cfg


def load_preset(name: str) -> RunConfig:
    """Shipped configuration for one of the reproduced figures."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("rydberg_dressing").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
    return parse_config(text, source=f"preset {name}")
