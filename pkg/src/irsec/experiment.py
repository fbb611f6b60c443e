"""Experiment configuration and the evaluations behind the CLI commands.

A configuration is a JSON object; every key is optional and defaults to
the urban-micro reference setup (4x4 MIMO, 2.5 GHz carrier, quarter
wavelength IRS spacing, amplitude profile 0.8/1.6/0.43 pi).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .capacity import DEFAULT_TOL, db_to_linear, ergodic_capacity
from .channel import (
    CorrelationSet,
    EnsembleDims,
    GainVector,
    SystemDims,
    case_spectra,
    element_aperture,
    irs_correlation,
    path_loss,
    ula_correlation,
)
from .eigenpdf import MarginalEigenPDF, build_marginal
from .errors import ConfigError, IrsecError
from .montecarlo import McEstimate, mc_capacity_effective, mc_capacity_rayleigh
from .optimizer import OptimizationTrace, OptimizerConfig, PhaseProblem, optimize_multistart, random_phases
from .phase import PhaseShiftProfile, PhaseVector, optimal_phase

__all__ = [
    "ExperimentConfig",
    "load_config",
    "SWEEP_AXES",
    "SWEEP_SERIES",
    "Scenario",
]

SPEED_OF_LIGHT = 299_792_458.0
SWEEP_AXES = ("N", "d_spacing", "kappa_min", "xi", "snr")
SWEEP_SERIES = ("optimized", "random", "no-irs", "ideal")


@dataclass(frozen=True)
class LinkLoss:
    C_dB: float
    nu: float
    d: float

    def linear(self) -> float:
        return path_loss(self.C_dB, self.nu, self.d)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    Attributes mirror the JSON keys; see :func:`load_config`.
    """

    M: int = 4
    K: int = 4
    N_H: int = 4
    N_V: int = 4
    case: int = 1
    kappa_min: float = 0.8
    xi: float = 1.6
    vartheta: float = 0.43 * math.pi
    carrier_hz: float = 2.5e9
    spacing_h: float = 0.25  # in wavelengths
    spacing_v: float = 0.25
    link1: LinkLoss = LinkLoss(26.0, 2.2, 8.0)
    link2: LinkLoss = LinkLoss(28.0, 3.67, 60.0)
    rho_tx: float = 0.0
    rho_rx: float = 0.0
    element_area: bool = True
    snr_reference: str = "link"
    snr_db: tuple = (10.0,)
    phases: Any = "random"
    sweep_axis: str = "N"
    sweep_values: tuple = (16, 36, 64)
    sweep_series: tuple = SWEEP_SERIES
    trials: int = 200_000
    seed: int = 1
    optimizer: OptimizerConfig = OptimizerConfig()
    starts: int = 4
    pdf_grid: tuple = ()
    ensemble: dict | None = None
    tol: float = DEFAULT_TOL

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def N(self) -> int:
        return self.N_H * self.N_V

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def profile(self) -> PhaseShiftProfile:
        return PhaseShiftProfile(self.kappa_min, self.xi, self.vartheta)

    def system(self) -> SystemDims:
        return SystemDims(self.M, self.K, self.N_H, self.N_V)

    def correlations(self) -> CorrelationSet:
        lam = self.wavelength
        r_irs = irs_correlation(self.N_H, self.N_V, self.spacing_h * lam, self.spacing_v * lam, lam)
        return CorrelationSet(
            R1=r_irs, T1=ula_correlation(self.M, self.rho_tx), R2=ula_correlation(self.K, self.rho_rx), T2=r_irs
        )

    def beta_product(self) -> float:
        """Gain multiplying every mode: element aperture and optional path loss."""
        beta = 1.0
        if self.element_area:
            # one aperture factor for each IRS-side correlation in the gain
            beta *= element_aperture(self.spacing_h, self.spacing_v, 1.0) ** 2
        if self.snr_reference == "transmit":
            beta *= self.link1.linear() * self.link2.linear()
        return beta

    def direct_beta(self) -> float:
        """Large-scale gain of the IRS-free reference link."""
        if self.snr_reference == "transmit":
            return path_loss(self.link2.C_dB, self.link2.nu, self.link1.d + self.link2.d)
        return 1.0

    def ensemble_dims(self) -> EnsembleDims:
        if self.ensemble is not None:
            e = self.ensemble
            return EnsembleDims(e["a"], e["q"], e["p"])
        return EnsembleDims.for_case(self.case, self.M, self.K, self.N)

    def snr_linear(self) -> np.ndarray:
        return db_to_linear(np.asarray(self.snr_db, dtype=float))


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"'{key}' must be an object")
    return val


def _num(section: dict, key: str, default, kind=float, where=""):
    if key not in section:
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}{key} must be a number, got {val!r}")
    if kind is int:
        if float(val) != int(val):
            raise ConfigError(f"{where}{key} must be an integer, got {val!r}")
        return int(val)
    if not math.isfinite(val):
        raise ConfigError(f"{where}{key} must be finite")
    return float(val)


def _num_list(val, name) -> tuple:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        val = [val]
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{name} must be a non-empty list of numbers")
    for v in val:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{name} entries must be finite numbers, got {v!r}")
    return tuple(float(v) for v in val)


def _grid(val) -> tuple:
    if isinstance(val, list):
        grid = _num_list(val, "pdf.grid")
    elif isinstance(val, dict):
        start = _num(val, "start", None, where="pdf.grid.")
        stop = _num(val, "stop", None, where="pdf.grid.")
        num = _num(val, "num", 200, int, where="pdf.grid.")
        spacing = val.get("spacing", "linear")
        if start is None or stop is None:
            raise ConfigError("pdf.grid needs 'start' and 'stop'")
        if num < 1 or start <= 0 or stop < start:
            raise ConfigError("pdf.grid needs 0 < start <= stop and num >= 1")
        if spacing == "log":
            grid = tuple(np.geomspace(start, stop, num).tolist())
        elif spacing == "linear":
            grid = tuple(np.linspace(start, stop, num).tolist())
        else:
            raise ConfigError("pdf.grid.spacing must be 'linear' or 'log'")
    else:
        raise ConfigError("pdf.grid must be a list or an object")
    if any(v <= 0 for v in grid):
        raise ConfigError("pdf grid values must be positive")
    return grid


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed JSON object into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        On unknown keys, wrong types or out-of-range values.
    """
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {"system", "case", "profile", "geometry", "path_loss", "correlation", "element_area",
             "snr_reference", "snr", "snr_db", "phases", "sweep", "mc", "optimizer", "pdf", "ensemble", "tol"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    base = ExperimentConfig()
    kw: dict[str, Any] = {}

    system = _section(raw, "system")
    for key in ("M", "K", "N_H", "N_V"):
        kw[key] = _num(system, key, getattr(base, key), int, "system.")
    if "N" in system:
        if "N_H" in system or "N_V" in system:
            raise ConfigError("give either system.N or system.N_H/N_V, not both")
        n = _num(system, "N", None, int, "system.")
        if n < 1:
            raise ConfigError("system.N must be >= 1")
        dims = SystemDims.from_total(kw["M"], kw["K"], n)
        kw["N_H"], kw["N_V"] = dims.N_H, dims.N_V
    for key in ("M", "K", "N_H", "N_V"):
        if kw[key] < 1:
            raise ConfigError(f"system.{key} must be >= 1")

    kw["case"] = raw.get("case", base.case)
    if kw["case"] not in (1, 2):
        raise ConfigError("case must be 1 or 2")

    prof = _section(raw, "profile")
    kw["kappa_min"] = _num(prof, "kappa_min", base.kappa_min, where="profile.")
    kw["xi"] = _num(prof, "xi", base.xi, where="profile.")
    if "vartheta_pi" in prof:
        kw["vartheta"] = _num(prof, "vartheta_pi", None, where="profile.") * math.pi
    else:
        kw["vartheta"] = _num(prof, "vartheta", base.vartheta, where="profile.")

    geo = _section(raw, "geometry")
    kw["carrier_hz"] = _num(geo, "carrier_hz", base.carrier_hz, where="geometry.")
    spacing = _num(geo, "spacing", None, where="geometry.")
    kw["spacing_h"] = _num(geo, "spacing_h", base.spacing_h if spacing is None else spacing, where="geometry.")
    kw["spacing_v"] = _num(geo, "spacing_v", base.spacing_v if spacing is None else spacing, where="geometry.")
    if kw["carrier_hz"] <= 0 or kw["spacing_h"] <= 0 or kw["spacing_v"] <= 0:
        raise ConfigError("geometry values must be positive")

    pl = _section(raw, "path_loss")
    for name in ("link1", "link2"):
        link = pl.get(name, {})
        if not isinstance(link, dict):
            raise ConfigError(f"path_loss.{name} must be an object")
        ref = getattr(base, name)
        loss = LinkLoss(
            _num(link, "C_dB", ref.C_dB, where=f"path_loss.{name}."),
            _num(link, "nu", ref.nu, where=f"path_loss.{name}."),
            _num(link, "d", ref.d, where=f"path_loss.{name}."),
        )
        if loss.d <= 0:
            raise ConfigError(f"path_loss.{name}.d must be positive")
        kw[name] = loss

    corr = _section(raw, "correlation")
    kw["rho_tx"] = _num(corr, "rho_tx", base.rho_tx, where="correlation.")
    kw["rho_rx"] = _num(corr, "rho_rx", base.rho_rx, where="correlation.")
    for key in ("rho_tx", "rho_rx"):
        if not 0.0 <= kw[key] < 1.0:
            raise ConfigError(f"correlation.{key} must lie in [0, 1)")

    kw["element_area"] = raw.get("element_area", base.element_area)
    if not isinstance(kw["element_area"], bool):
        raise ConfigError("element_area must be true or false")
    kw["snr_reference"] = raw.get("snr_reference", base.snr_reference)
    if kw["snr_reference"] not in ("link", "transmit"):
        raise ConfigError("snr_reference must be 'link' or 'transmit'")
    if "snr" in raw and "snr_db" in raw:
        raise ConfigError("give either snr (linear) or snr_db, not both")
    if "snr" in raw:
        linear = _num_list(raw["snr"], "snr")
        if any(v <= 0 for v in linear):
            raise ConfigError("snr values must be positive")
        kw["snr_db"] = tuple(10.0 * math.log10(v) for v in linear)
    else:
        kw["snr_db"] = _num_list(raw["snr_db"], "snr_db") if "snr_db" in raw else base.snr_db

    phases = raw.get("phases", base.phases)
    if isinstance(phases, list):
        _num_list(phases, "phases")
        phases = tuple(float(v) for v in phases)
    elif phases not in ("random", "optimal", "optimized"):
        raise ConfigError("phases must be 'random', 'optimal', 'optimized' or a list of radians")
    kw["phases"] = phases

    sweep = _section(raw, "sweep")
    axis = sweep.get("axis", base.sweep_axis)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep.axis must be one of {', '.join(SWEEP_AXES)}")
    kw["sweep_axis"] = axis
    kw["sweep_values"] = _num_list(sweep["values"], "sweep.values") if "values" in sweep else base.sweep_values
    if axis == "N" and any(v < 1 or v != int(v) for v in kw["sweep_values"]):
        raise ConfigError("sweep.values for axis N must be positive integers")
    if axis in ("d_spacing",) and any(v <= 0 for v in kw["sweep_values"]):
        raise ConfigError("sweep.values for axis d_spacing must be positive")
    series = sweep.get("series", list(base.sweep_series))
    if isinstance(series, str):
        series = [series]
    if not isinstance(series, list) or not series or any(s not in SWEEP_SERIES for s in series):
        raise ConfigError(f"sweep.series must list entries from {', '.join(SWEEP_SERIES)}")
    kw["sweep_series"] = tuple(series)

    mc = _section(raw, "mc")
    kw["trials"] = _num(mc, "trials", base.trials, int, "mc.")
    kw["seed"] = _num(mc, "seed", base.seed, int, "mc.")
    if kw["trials"] < 100:
        raise ConfigError("mc.trials must be >= 100")
    if not 0 <= kw["seed"] < 2**64:
        raise ConfigError("mc.seed must be an unsigned 64-bit integer")

    opt = _section(raw, "optimizer")
    opt_kw = {}
    for f in dataclasses.fields(OptimizerConfig):
        kind = int if f.name == "max_iters" else float
        opt_kw[f.name] = _num(opt, f.name, getattr(base.optimizer, f.name), kind, "optimizer.")
    try:
        kw["optimizer"] = OptimizerConfig(**opt_kw)
    except IrsecError as exc:
        raise ConfigError(f"optimizer: {exc}") from None
    kw["starts"] = _num(opt, "starts", base.starts, int, "optimizer.")
    if kw["starts"] < 1:
        raise ConfigError("optimizer.starts must be >= 1")
    extra = set(opt) - {f.name for f in dataclasses.fields(OptimizerConfig)} - {"starts"}
    if extra:
        raise ConfigError(f"unknown optimizer keys: {', '.join(sorted(extra))}")

    pdf = _section(raw, "pdf")
    kw["pdf_grid"] = _grid(pdf["grid"]) if "grid" in pdf else base.pdf_grid

    if "ensemble" in raw:
        ens = raw["ensemble"]
        if not isinstance(ens, dict):
            raise ConfigError("ensemble must be an object")
        try:
            dims = EnsembleDims(ens.get("a"), ens.get("q"), ens.get("p"))
        except IrsecError as exc:
            raise ConfigError(f"ensemble: {exc}") from None
        gains = _num_list(ens.get("gains"), "ensemble.gains")
        if len(gains) != dims.q or any(g <= 0 for g in gains):
            raise ConfigError("ensemble.gains must hold q positive values")
        kw["ensemble"] = {"a": dims.a, "q": dims.q, "p": dims.p, "gains": gains}

    kw["tol"] = _num(raw, "tol", base.tol)
    if kw["tol"] <= 0:
        raise ConfigError("tol must be positive")

    cfg = ExperimentConfig(**kw)
    try:
        cfg.profile()
    except IrsecError as exc:
        raise ConfigError(f"profile: {exc}") from None
    if isinstance(cfg.phases, tuple) and len(cfg.phases) != cfg.ensemble_dims().q:
        raise ConfigError(f"phases list must have q={cfg.ensemble_dims().q} entries")
    return cfg


def load_config(path: str | None) -> ExperimentConfig:
    """Read and validate a JSON configuration file (``None`` gives the defaults)."""
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    return config_from_dict(raw)


@dataclass
class Scenario:
    """A configuration resolved into channel statistics at one SNR."""

    config: ExperimentConfig
    snr: float
    problem: PhaseProblem | None = None
    _optimized: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        cfg = self.config
        if cfg.ensemble is None:
            spectra = case_spectra(cfg.case, cfg.correlations())
            self.problem = PhaseProblem(cfg.ensemble_dims(), spectra, cfg.profile(), self.snr, cfg.M,
                                        cfg.beta_product())

    @property
    def dims(self) -> EnsembleDims:
        return self.config.ensemble_dims()

    def optimize(self) -> tuple[PhaseVector, OptimizationTrace]:
        if self._optimized is None:
            cfg = self.config
            phases, trace, _ = optimize_multistart(self.problem, cfg.optimizer, cfg.starts, cfg.seed)
            self._optimized = (phases, trace)
        return self._optimized

    def phases(self, kind=None) -> PhaseVector | None:
        kind = self.config.phases if kind is None else kind
        q = self.dims.q
        if isinstance(kind, tuple):
            return PhaseVector(kind)
        if kind == "random":
            return random_phases(q, self.config.seed)
        if kind == "optimal":
            return PhaseVector(np.full(q, optimal_phase(self.config.profile())))
        if kind == "optimized":
            return self.optimize()[0]
        raise ConfigError(f"unknown phase setting {kind!r}")

    def gains(self, kind=None) -> GainVector:
        if self.problem is None:
            return GainVector.from_values(self.config.ensemble["gains"])
        return self.problem.gains(self.phases(kind))

    def pdf(self, kind=None) -> MarginalEigenPDF:
        return build_marginal(self.dims, self.gains(kind))

    def capacity(self, kind=None) -> float:
        return ergodic_capacity(self.pdf(kind), self.snr, self.config.M, self.config.tol).ec_bits

    def mc_capacity(self, kind=None) -> McEstimate:
        cfg = self.config
        return mc_capacity_effective(self.dims, self.gains(kind), self.snr, cfg.M, cfg.trials, cfg.seed)

    def no_irs(self) -> McEstimate:
        cfg = self.config
        return mc_capacity_rayleigh(cfg.M, cfg.K, self.snr * cfg.direct_beta(), cfg.trials, cfg.seed)


def sweep_point(config: ExperimentConfig, value: float) -> tuple[ExperimentConfig, float]:
    """Configuration and linear SNR for one value of the sweep axis."""
    axis = config.sweep_axis
    snr_db = config.snr_db[0]
    if axis == "N":
        dims = SystemDims.from_total(config.M, config.K, int(value))
        return config.replace(N_H=dims.N_H, N_V=dims.N_V), float(db_to_linear(snr_db))
    if axis == "d_spacing":
        return config.replace(spacing_h=value, spacing_v=value), float(db_to_linear(snr_db))
    if axis == "kappa_min":
        return config.replace(kappa_min=value), float(db_to_linear(snr_db))
    if axis == "xi":
        return config.replace(xi=value), float(db_to_linear(snr_db))
    if axis == "snr":
        return config, float(db_to_linear(value))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def sweep_values(config: ExperimentConfig, value: float) -> dict[str, float]:
    """EC of every requested series at one sweep value."""
    cfg, snr = sweep_point(config, value)
    scen = Scenario(cfg, snr)
    out = {}
    for series in cfg.sweep_series:
        if series == "optimized":
            out[series] = scen.problem.value(scen.optimize()[0], tol=cfg.tol)
        elif series == "random":
            out[series] = scen.capacity("random")
        elif series == "ideal":
            ideal = Scenario(cfg.replace(kappa_min=1.0, xi=0.0), snr)
            out[series] = ideal.capacity("optimal")
        elif series == "no-irs":
            out[series] = scen.no_irs().mean
    return out
