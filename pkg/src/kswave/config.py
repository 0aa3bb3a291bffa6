"""Experiment configuration: INI-style key/value file, one canonical schema.

Example (every key optional except ``[ic] kind``)::

    [meta]
    schema_version = 1

    [grid]
    L = 20
    M = 2000

    [params]
    sigma = 1          ; or sigma2
    chi = 1

    [time]
    T_final = 40
    cfl = 0.9
    dt_max = 0.1
    snapshot_times = 0, 10, 25, 40
    sample_interval = 0.1
    reaction = true

    [ic]
    kind = polynomial
    x0 = -15

    [diagnostics]
    betas = 0, 0.2, 0.6667, 0.8
    t1 = 15
    t2 = 40
    jump_window = 3

    [wave]
    dz = 0.01
    Z = 40
    tol = 1e-10
    max_iter = 200

    [output]
    directory = out

    [sweep]
    param = alpha
    values = 1, 2, 5
"""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import InitialCondition, InvalidParameterError

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "GridConfig",
    "TimeConfig",
    "DiagnosticsConfig",
    "WaveConfig",
    "OutputConfig",
    "SweepSpec",
    "ExperimentConfig",
    "parse_config",
    "parse_config_string",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or missing configuration key."""

    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class GridConfig:
    L: float = 20.0
    M: int = 2000


@dataclass(frozen=True)
class TimeConfig:
    T_final: float = 40.0
    cfl: float = 0.9
    dt_max: float = 0.1
    snapshot_times: tuple = (0.0, 10.0, 25.0, 40.0)
    sample_interval: float = 0.1
    reaction: bool = True


@dataclass(frozen=True)
class DiagnosticsConfig:
    betas: tuple = (0.0, 0.2, 0.6667, 0.8)
    t1: float = 15.0
    t2: float = 40.0
    jump_window: int = 3
    front_threshold: float = 1e-8
    separatrix: str = "auto"     # auto | kernel | gradient | off
    h0: float | None = None


@dataclass(frozen=True)
class WaveConfig:
    dz: float = 0.01
    Z: float | None = None       # default 40 sigma
    tol: float = 1e-10
    max_iter: int = 200
    eta: float | None = None     # default 1/(2 sigma)


@dataclass(frozen=True)
class OutputConfig:
    directory: str | None = None
    trace_file: str = "trace.csv"
    snapshot_prefix: str = "snapshot_t"
    profile_file: str = "profile.csv"
    summary_file: str = "summary.meta"


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    sigma: float = 1.0
    chi: float = 1.0
    time: TimeConfig = field(default_factory=TimeConfig)
    ic: InitialCondition = field(default_factory=lambda: InitialCondition("polynomial"))
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    wave: WaveConfig = field(default_factory=WaveConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepSpec | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        validate(self)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def validate(cfg: ExperimentConfig) -> None:
    g, t, d = cfg.grid, cfg.time, cfg.diagnostics
    if not g.L > 0:
        raise ConfigError("grid.L", "must be positive")
    if g.M < 16:
        raise ConfigError("grid.M", "must be at least 16")
    if not cfg.sigma > 0:
        raise ConfigError("params.sigma", "must be positive")
    if not cfg.chi > 0:
        raise ConfigError("params.chi", "must be positive")
    if not t.T_final > 0:
        raise ConfigError("time.T_final", "must be positive")
    if not 0 < t.cfl <= 1:
        raise ConfigError("time.cfl", "must lie in (0, 1]")
    if not t.dt_max > 0:
        raise ConfigError("time.dt_max", "must be positive")
    if not t.sample_interval > 0:
        raise ConfigError("time.sample_interval", "must be positive")
    for s in t.snapshot_times:
        if not 0 <= s <= t.T_final:
            raise ConfigError("time.snapshot_times", f"{s} outside [0, T_final]")
    for b in d.betas:
        if not 0 <= b < 1:
            raise ConfigError("diagnostics.betas", f"beta={b} outside [0, 1)")
    if not 0 < d.t1 < d.t2 <= t.T_final:
        raise ConfigError("diagnostics.t1", f"need 0 < t1 < t2 <= T_final, got t1={d.t1}, t2={d.t2}")
    if d.jump_window < 1:
        raise ConfigError("diagnostics.jump_window", "must be >= 1")
    if d.separatrix not in ("auto", "kernel", "gradient", "off"):
        raise ConfigError("diagnostics.separatrix", f"unknown mode {d.separatrix!r}")
    w = cfg.wave
    if not w.dz > 0:
        raise ConfigError("wave.dz", "must be positive")
    if w.Z is not None and not w.Z > 0:
        raise ConfigError("wave.Z", "must be positive")
    if not w.tol > 0:
        raise ConfigError("wave.tol", "must be positive")
    if w.max_iter < 1:
        raise ConfigError("wave.max_iter", "must be >= 1")
    if w.eta is not None and not 0 < w.eta < 1 / cfg.sigma:
        raise ConfigError("wave.eta", "must lie in (0, 1/sigma)")
    if cfg.sweep is not None:
        if not cfg.sweep.values:
            raise ConfigError("sweep.values", "empty sweep list")
        if cfg.sweep.param not in SWEEP_PARAMS:
            raise ConfigError("sweep.param", f"expected one of {SWEEP_PARAMS}")
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError("meta.schema_version", f"unsupported version {cfg.schema_version}")


SWEEP_PARAMS = ("alpha", "sigma2", "sigma", "chi", "M")

_KNOWN = {
    "meta": {"schema_version"},
    "grid": {"L", "M"},
    "params": {"sigma", "sigma2", "chi"},
    "time": {"T_final", "cfl", "dt_max", "snapshot_times", "sample_interval", "reaction"},
    "ic": {"kind", "x0", "alpha", "exponent", "value", "profile"},
    "diagnostics": {"betas", "t1", "t2", "jump_window", "front_threshold", "separatrix", "h0"},
    "wave": {"dz", "Z", "tol", "max_iter", "eta"},
    "output": {"directory", "trace_file", "snapshot_prefix", "profile_file", "summary_file"},
    "sweep": {"param", "values"},
}


def _num(sec, key, conv, name):
    raw = sec[key]
    try:
        v = conv(raw)
    except ValueError as e:
        raise ConfigError(name, f"cannot parse {raw!r}: {e}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    return v


def _floats(raw: str) -> tuple:
    return tuple(float(s) for s in raw.replace(";", ",").split(",") if s.strip())


def _bool(raw: str) -> bool:
    r = raw.strip().lower()
    if r in ("1", "true", "yes", "on"):
        return True
    if r in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def parse_config_string(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str  # keys are case-sensitive (T_final, L, M, Z)
    cp.read_string(text)

    for sec in cp.sections():
        if sec not in _KNOWN:
            log.warning("unknown config section [%s] ignored", sec)
            continue
        for key in cp[sec]:
            if key not in _KNOWN[sec]:
                log.warning("unknown config key %s.%s ignored", sec, key)

    def get(sec, key, conv, default):
        if cp.has_section(sec) and key in cp[sec]:
            return _num(cp[sec], key, conv, f"{sec}.{key}")
        return default

    version = get("meta", "schema_version", int, SCHEMA_VERSION)

    grid = GridConfig(L=get("grid", "L", float, 20.0), M=get("grid", "M", int, 2000))
    td = TimeConfig()
    time = TimeConfig(
        T_final=get("time", "T_final", float, td.T_final),
        cfl=get("time", "cfl", float, td.cfl),
        dt_max=get("time", "dt_max", float, td.dt_max),
        snapshot_times=get("time", "snapshot_times", _floats, None),
        sample_interval=get("time", "sample_interval", float, td.sample_interval),
        reaction=get("time", "reaction", _bool, True),
    )
    if time.snapshot_times is None:
        time = replace(time, snapshot_times=tuple(s for s in td.snapshot_times if s <= time.T_final))

    if not (cp.has_section("ic") and "kind" in cp["ic"]):
        raise ConfigError("ic.kind", "missing required key")
    kind = cp["ic"]["kind"].strip()
    ic_kw = dict(
        kind=kind,
        x0=get("ic", "x0", float, -15.0),
        L=grid.L,
        alpha=get("ic", "alpha", float, 5.0),
        exponent=get("ic", "exponent", float, 2.0),
        value=get("ic", "value", float, 0.0),
    )
    if kind == "profile":
        if "profile" not in cp["ic"]:
            raise ConfigError("ic.profile", "profile IC needs a CSV path")
        from .io import read_profile_csv

        path = Path(cp["ic"]["profile"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        z, U = read_profile_csv(path)[:2]
        ic_kw["table"] = (z, U)
    try:
        ic = InitialCondition(**ic_kw)
    except InvalidParameterError as e:
        raise ConfigError("ic.kind", str(e)) from None

    dd = DiagnosticsConfig()
    sep = cp["diagnostics"].get("separatrix", "auto").strip() if cp.has_section("diagnostics") else "auto"
    diagnostics = DiagnosticsConfig(
        betas=get("diagnostics", "betas", _floats, dd.betas),
        t1=get("diagnostics", "t1", float, dd.t1),
        t2=get("diagnostics", "t2", float, min(dd.t2, time.T_final)),
        jump_window=get("diagnostics", "jump_window", int, dd.jump_window),
        front_threshold=get("diagnostics", "front_threshold", float, dd.front_threshold),
        separatrix=sep,
        h0=get("diagnostics", "h0", float, None),
    )
    wave = WaveConfig(
        dz=get("wave", "dz", float, 0.01),
        Z=get("wave", "Z", float, None),
        tol=get("wave", "tol", float, 1e-10),
        max_iter=get("wave", "max_iter", int, 200),
        eta=get("wave", "eta", float, None),
    )
    od = OutputConfig()
    out_sec = cp["output"] if cp.has_section("output") else {}
    output = OutputConfig(**{k: out_sec.get(k, getattr(od, k)) for k in _KNOWN["output"]})

    sweep = None
    if cp.has_section("sweep"):
        s = cp["sweep"]
        if "param" not in s:
            raise ConfigError("sweep.param", "missing required key")
        values = _num(s, "values", _floats, "sweep.values") if "values" in s else ()
        sweep = SweepSpec(s["param"].strip(), values)

    sigma = get("params", "sigma", float, None)
    sigma2 = get("params", "sigma2", float, None)
    if sigma is not None and sigma2 is not None:
        raise ConfigError("params.sigma2", "give sigma or sigma2, not both")
    if sigma2 is not None:
        if not sigma2 > 0:
            raise ConfigError("params.sigma2", "must be positive")
        sigma = math.sqrt(sigma2)

    return ExperimentConfig(
        grid=grid,
        sigma=1.0 if sigma is None else sigma,
        chi=get("params", "chi", float, 1.0),
        time=time,
        ic=ic,
        diagnostics=diagnostics,
        wave=wave,
        output=output,
        sweep=sweep,
        schema_version=version,
    )


def parse_config(path) -> ExperimentConfig:
    """Read and validate a config file; defaults follow the reference experiment."""
    path = Path(path)
    return parse_config_string(path.read_text(), base_dir=path.parent)
