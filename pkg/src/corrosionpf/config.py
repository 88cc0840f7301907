"""Flat ``section.key = value`` configuration files.

Blank lines and text after ``#`` are ignored. Values are numbers, booleans
(``true``/``false``), bare strings or comma-separated lists. All quantities
are SI: metres, seconds, volts vs SCE. Unset keys take the desk-scale
preset of ``scenario.kind`` (see :data:`corrosionpf.scenarios.PRESETS`).
Example::

    scenario.kind = pitting
    scenario.E_app = -0.479
    geometry.width = 60e-6
    time.t_end = 100
    batch.grain_sizes = 20e-6, 40e-6
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .scenarios import ScenarioConfig

SECTIONS = {
    "scenario": ("kind", "E_app", "delta_E_max", "eps_inf", "microstructure", "grain_size", "seed"),
    "grid": ("dx", "grade_ratio", "radial_cells"),
    "geometry": ("width", "metal_depth", "electrolyte_height", "band_above", "wire_radius", "bath_radius",
                 "defect_radius", "protective_thickness"),
    "model": ("L0", "chi", "t_c", "electromigration", "reactions", "edl", "mechanics", "fixed_xi"),
    "time": ("t_end", "dt_max", "dt_init", "output_interval", "log_outputs"),
    "output": ("out_dir", "snapshot_every"),
}


@dataclass
class BatchConfig:
    """Reduced statistical study; ``full_matrix`` restores the published matrix."""

    n_realizations: int = 3
    grain_sizes: tuple = (20e-6,)
    delta_E: tuple = (0.0, 0.073)
    strains: tuple = (0.0,)
    potentials: tuple = (-0.479,)
    full_matrix: bool = False
    workers: int = 1


@dataclass
class ConvergenceConfig:
    """Mesh levels as divisors of the interface thickness, plus an optional time-step halving."""

    levels: tuple = (2, 4, 6)
    dt_halving: bool = True


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    source: str = "<defaults>"


class ConfigError(ValueError):
    """Malformed configuration; the message names the key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None, source: str = ""):
        where = f"{source}:{line}: " if line is not None else (f"{source}: " if source else "")
        what = f"{key}: " if key else ""
        super().__init__(f"{where}{what}{message}")
        self.key = key
        self.line = line


def _parse_scalar(text: str, kind):
    t = text.strip()
    if kind is bool:
        low = t.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected true/false, got {t!r}")
    if kind is int:
        v = float(t)
        if v != int(v):
            raise ValueError(f"expected an integer, got {t!r}")
        return int(v)
    if kind is float:
        return float(t)
    return t


def _field_kind(dc, name):
    default = {f.name: f for f in dataclasses.fields(dc)}[name].default
    if isinstance(default, tuple):
        return tuple, type(default[0]) if default else float
    if isinstance(default, bool) or name in ("mechanics", "fixed_xi"):
        return bool, None
    if isinstance(default, int):
        return int, None
    if isinstance(default, float):
        return float, None
    return str, None


def _convert(dc, name, value: str):
    kind, item = _field_kind(dc, name)
    if kind is tuple:
        parts = [p for p in value.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(_parse_scalar(p, item) for p in parts)
    if name in ("mechanics", "fixed_xi") and value.strip().lower() in ("auto", "none"):
        return None
    return _parse_scalar(value, kind)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` on the first problem."""
    scen, batch, conv = {}, {}, {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'section.key = value'", None, lineno, source)
        key, _, value = (s.strip() for s in line.partition("="))
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key, lineno, source)
        seen[key] = lineno
        section, dot, name = key.partition(".")
        if not dot or not name:
            raise ConfigError("key must have the form section.key", key, lineno, source)
        if section in SECTIONS:
            if name not in SECTIONS[section]:
                raise ConfigError(f"unknown key in section '{section}'", key, lineno, source)
            dc, target = ScenarioConfig, scen
        elif section == "batch":
            dc, target = BatchConfig, batch
        elif section == "convergence":
            dc, target = ConvergenceConfig, conv
        else:
            raise ConfigError("unknown section", key, lineno, source)
        if name not in {f.name for f in dataclasses.fields(dc)}:
            raise ConfigError(f"unknown key in section '{section}'", key, lineno, source)
        if value == "":
            raise ConfigError("missing value", key, lineno, source)
        try:
            target[name] = (_convert(dc, name, value), lineno, key)
        except ValueError as exc:
            raise ConfigError(str(exc), key, lineno, source) from None
    try:
        fields = {k: v[0] for k, v in scen.items()}
        scenario = ScenarioConfig.preset(fields.pop("kind", "pitting"), **fields)
    except ValueError as exc:
        # attribute the failure to a key when the message names one
        msg = str(exc)
        first = msg.split(" ", 1)[0].rpartition(".")[2]
        for k, (_, lineno, full) in scen.items():
            if k == first:
                raise ConfigError(msg, full, lineno, source) from None
        raise ConfigError(msg, None, None, source) from None
    b = BatchConfig(**{k: v[0] for k, v in batch.items()})
    if b.n_realizations < 2:
        raise ConfigError("must be at least 2", "batch.n_realizations",
                          batch.get("n_realizations", (0, None))[1], source)
    c = ConvergenceConfig(**{k: v[0] for k, v in conv.items()})
    return RunConfig(scenario, b, c, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, str(path))


def format_config(cfg: ScenarioConfig) -> str:
    """Render a scenario as configuration text that parses back to the same values."""
    lines = []
    for section, names in SECTIONS.items():
        for name in names:
            v = getattr(cfg, name)
            if isinstance(v, bool):
                s = "true" if v else "false"
            elif v is None:
                s = "auto"
            else:
                s = repr(v) if isinstance(v, float) else str(v)
            lines.append(f"{section}.{name} = {s}")
    return "\n".join(lines) + "\n"
