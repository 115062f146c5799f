"""Experiment configuration: JSON in, validated dataclasses out.

Top-level keys are exactly those of ``ExperimentConfig``; every block is
optional except ``trap``. Units are SI-style throughout (Hz, nm, um, ms).
Unknown keys anywhere are errors.
"""
from __future__ import annotations

from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
import json
from pathlib import Path
import typing
from typing import List, Optional, Union

from .units import RB87_SCATTERING_LENGTH_NM


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


RB87_MASS_AMU = 86.909180527


@dataclass
class RampBlock:
    initial_nu_z: float
    initial_nu_perp: float
    duration_ms: float
    final_nu_z: Optional[float] = None
    final_nu_perp: Optional[float] = None


@dataclass
class TrapBlock:
    nu_z: float
    nu_perp: float
    atom_number: int
    scattering_length_nm: float = RB87_SCATTERING_LENGTH_NM
    mass_amu: float = RB87_MASS_AMU
    ramp: Optional[RampBlock] = None


@dataclass
class ModelBlock:
    kind: str = "npse"


@dataclass
class GridBlock:
    n_points: Union[int, str] = "auto"
    box_length_um: Union[float, str] = "auto"
    points_per_healing_length: float = 4.0
    box_tf_radii: float = 4.5


@dataclass
class TimeBlock:
    phase_safety: float = 0.05
    kinetic_phase: float = 1.0
    dt_us: Optional[float] = None
    snapshot_interval_ms: float = 0.5
    ground_state_tol: float = 1e-9


@dataclass
class MergeBlock:
    barrier_depth_hz: float = 1000.0
    lattice_spacing_um: float = 5.7
    lattice_offset_um: float = 0.0
    evolve_ms: float = 100.0
    snapshot_interval_ms: float = 0.5


def _default_amplitudes():
    return [2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5]


@dataclass
class SweepBlock:
    amplitudes_um: List[float] = field(default_factory=_default_amplitudes)
    evolve_ms: float = 120.0
    amplitude_tolerance: float = 0.02
    max_refinements: int = 5
    workers: int = 1
    single_offset_fraction: float = 0.1
    amplitude_kind: str = "peak"


@dataclass
class Fig2cBlock:
    amplitudes_um: Optional[List[float]] = None


@dataclass
class TrackingBlock:
    search_window_fraction: float = 0.7
    min_contrast: float = 0.2
    background_window_um: float = 1.5
    min_pair_separation_um: float = 0.0
    follow_pair: bool = True


@dataclass
class ResolutionBlock:
    sigma_z_um: float = 1.0
    sigma_t_ms: float = 0.0


@dataclass
class OutputBlock:
    directory: str = "out"


@dataclass
class ExperimentConfig:
    trap: TrapBlock
    model: ModelBlock = field(default_factory=ModelBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    time: TimeBlock = field(default_factory=TimeBlock)
    merge: MergeBlock = field(default_factory=MergeBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    fig2c: Fig2cBlock = field(default_factory=Fig2cBlock)
    tracking: TrackingBlock = field(default_factory=TrackingBlock)
    resolution: ResolutionBlock = field(default_factory=ResolutionBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self):
        return asdict(self)


# --- generic construction ---------------------------------------------------

def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is Union:
        if value is None and type(None) in args:
            return None
        errors = []
        for arg in args:
            if arg is type(None):
                continue
            try:
                return _coerce(arg, value, path)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[0] if len(errors) == 1 else f"{path}: invalid value {value!r}")
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return [_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value)]
    if is_dataclass(tp):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported type {tp}")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {data!r}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    for key in data:
        if key not in names:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown key")
    kwargs = {}
    for f in fields(cls):
        where = f"{path}.{f.name}" if path else f.name
        if f.name in data:
            kwargs[f.name] = _coerce(hints[f.name], data[f.name], where)
        elif f.default is MISSING and f.default_factory is MISSING:
            raise ConfigError(f"{where}: required key missing")
    return cls(**kwargs)


# --- cross-field validation -------------------------------------------------

def _positive(value, path):
    if not value > 0:
        raise ConfigError(f"{path}: must be positive, got {value}")


def validate(cfg):
    t = cfg.trap
    for name in ("nu_z", "nu_perp", "atom_number", "scattering_length_nm", "mass_amu"):
        _positive(getattr(t, name), f"trap.{name}")
    if not t.nu_z < t.nu_perp:
        raise ConfigError(
            f"trap.nu_z ({t.nu_z}) must be below trap.nu_perp ({t.nu_perp}) for a quasi-1D trap"
        )
    if t.ramp is not None:
        r = t.ramp
        for name in ("initial_nu_z", "initial_nu_perp"):
            _positive(getattr(r, name), f"trap.ramp.{name}")
        if r.duration_ms < 0:
            raise ConfigError("trap.ramp.duration_ms: must be >= 0")
        if not r.initial_nu_z < r.initial_nu_perp:
            raise ConfigError(
                "trap.ramp.initial_nu_z must be below trap.ramp.initial_nu_perp"
            )
        if r.final_nu_z is None:
            r.final_nu_z = t.nu_z
        if r.final_nu_perp is None:
            r.final_nu_perp = t.nu_perp
        if (r.final_nu_z, r.final_nu_perp) != (t.nu_z, t.nu_perp):
            raise ConfigError(
                "trap.ramp.final_nu_z/final_nu_perp must equal trap.nu_z/trap.nu_perp"
            )
    if cfg.model.kind not in ("npse", "gpe1d"):
        raise ConfigError(f"model.kind: expected 'npse' or 'gpe1d', got {cfg.model.kind!r}")
    g = cfg.grid
    if isinstance(g.n_points, str):
        if g.n_points != "auto":
            raise ConfigError(f"grid.n_points: expected an integer or 'auto', got {g.n_points!r}")
    elif g.n_points < 256 or g.n_points & (g.n_points - 1):
        raise ConfigError(f"grid.n_points: must be a power of two >= 256, got {g.n_points}")
    if isinstance(g.box_length_um, str):
        if g.box_length_um != "auto":
            raise ConfigError("grid.box_length_um: expected a number or 'auto'")
    else:
        _positive(g.box_length_um, "grid.box_length_um")
    _positive(g.points_per_healing_length, "grid.points_per_healing_length")
    if g.box_tf_radii < 4:
        raise ConfigError("grid.box_tf_radii: must be >= 4")
    tm = cfg.time
    for name in ("phase_safety", "kinetic_phase", "snapshot_interval_ms", "ground_state_tol"):
        _positive(getattr(tm, name), f"time.{name}")
    if tm.dt_us is not None:
        _positive(tm.dt_us, "time.dt_us")
    m = cfg.merge
    if m.barrier_depth_hz < 0:
        raise ConfigError("merge.barrier_depth_hz: must be >= 0")
    for name in ("lattice_spacing_um", "evolve_ms", "snapshot_interval_ms"):
        _positive(getattr(m, name), f"merge.{name}")
    s = cfg.sweep
    if not s.amplitudes_um:
        raise ConfigError("sweep.amplitudes_um: must not be empty")
    for i, a in enumerate(s.amplitudes_um):
        _positive(a, f"sweep.amplitudes_um[{i}]")
    for name in ("evolve_ms", "amplitude_tolerance", "workers", "single_offset_fraction"):
        _positive(getattr(s, name), f"sweep.{name}")
    if s.max_refinements < 0:
        raise ConfigError("sweep.max_refinements: must be >= 0")
    if s.amplitude_kind not in ("peak", "rms"):
        raise ConfigError("sweep.amplitude_kind: expected 'peak' or 'rms'")
    if cfg.fig2c.amplitudes_um is not None:
        for i, a in enumerate(cfg.fig2c.amplitudes_um):
            _positive(a, f"fig2c.amplitudes_um[{i}]")
    tr = cfg.tracking
    if not 0 < tr.search_window_fraction <= 1:
        raise ConfigError("tracking.search_window_fraction: must be in (0, 1]")
    if not 0 <= tr.min_contrast < 1:
        raise ConfigError("tracking.min_contrast: must be in [0, 1)")
    _positive(tr.background_window_um, "tracking.background_window_um")
    if cfg.resolution.sigma_z_um < 0 or cfg.resolution.sigma_t_ms < 0:
        raise ConfigError("resolution: widths must be >= 0")
    return cfg


# --- loading ----------------------------------------------------------------

def _set_path(data, dotted, value):
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        if node.get(k) is None:
            node[k] = {}
        node = node[k]
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted}: {k} is not an object")
    node[keys[-1]] = value


def parse_override(text):
    """'a.b=value' -> ('a.b', parsed value); JSON values, else plain strings."""
    if "=" not in text:
        raise ConfigError(f"override {text!r}: expected key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def config_from_dict(data, overrides=()):
    data = json.loads(json.dumps(data))  # deep copy
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        _set_path(data, key, value)
    if "trap" not in data:
        raise ConfigError("trap: required key missing")
    return validate(_build(ExperimentConfig, data, ""))


def load_config(path, overrides=()):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data, overrides)


def write_echo(cfg, directory, name="config.resolved.json"):
    """Write the fully resolved config next to the outputs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = directory / name
    out.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out
