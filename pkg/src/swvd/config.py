"""Flat ``key = value`` scenario configuration.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines
are ignored; keys are case sensitive. Unset keys take their defaults, some
of which depend on the scenario (``t_end``, ``sigma_tol``, ``bathymetry``).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

SCENARIOS = ("example1-flat", "example1-humps", "example2", "example3", "custom")
FORMATS = ("csv", "vtk")
CORRECTION = ("step", "off")
BATHY = ("flat", "humps", "hump")


@dataclass
class ScenarioConfig:
    scenario: str = "example1-flat"
    nx: int = 100
    ny: int = 100
    x0: float = -1.0
    x1: float = 1.0
    y0: float = -1.0
    y1: float = 1.0
    g: float = 1.0
    rho0: float = 997.0
    sigma: float = 1e-6
    eps: float = 1e-4
    tau: float | None = None            # None: max cell area squared
    t_end: float | None = None
    max_steps: int = 0                  # 0: unlimited
    bathymetry: str | None = None
    max_level: int = 0                  # 0: uniform mesh
    sigma_tol: float | None = None
    coarsen_factor: float = 0.1
    wlr_floor: float = 1e-9
    interface_buffer: int = 1
    initial_cycles: int | None = None   # None: max_level
    correction: str = "step"
    mixed_reset: bool = True
    reflux: bool = True
    dt_still: float = 1e-2
    snapshots: int = 0
    format: str = "csv"
    out_dir: str = "out"
    circle_x: float = 0.0
    circle_y: float = 0.0
    circle_r: float = 0.5
    w_in: float = 2.0
    w_out: float = 1.0
    rho_in: float = 1.5                 # multiples of rho0
    rho_out: float = 1.0

    def domain(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def resolved(self):
        """Copy with scenario-dependent defaults filled in."""
        from .scenarios import make_scenario
        sc = make_scenario(self)
        c = dataclasses.replace(self)
        if c.t_end is None:
            c.t_end = sc.t_end
        if c.sigma_tol is None:
            c.sigma_tol = sc.sigma_tol
        if c.bathymetry is None:
            c.bathymetry = sc.bathymetry
        if c.initial_cycles is None:
            c.initial_cycles = c.max_level
        return c

    def validate(self):
        def bad(msg):
            raise ConfigError(msg)
        if self.scenario not in SCENARIOS:
            bad(f"scenario must be one of {', '.join(SCENARIOS)}, got {self.scenario!r}")
        for k in ("g", "rho0", "sigma", "eps"):
            if not getattr(self, k) > 0:
                bad(f"{k} must be positive, got {getattr(self, k)!r}")
        if self.tau is not None and not self.tau > 0:
            bad(f"tau must be positive, got {self.tau!r}")
        if self.nx < 1 or self.ny < 1:
            bad(f"nx and ny must be >= 1, got {self.nx}, {self.ny}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            bad("domain must satisfy x0 < x1 and y0 < y1")
        if self.t_end is not None and self.t_end < 0:
            bad(f"t_end must be >= 0, got {self.t_end}")
        if self.max_level < 0 or self.max_steps < 0 or self.snapshots < 0:
            bad("max_level, max_steps and snapshots must be >= 0")
        if self.sigma_tol is not None and not 0 < self.sigma_tol < 1:
            bad(f"sigma_tol must lie in (0, 1), got {self.sigma_tol}")
        if not 0 <= self.coarsen_factor <= 1:
            bad(f"coarsen_factor must lie in [0, 1], got {self.coarsen_factor}")
        if self.bathymetry is not None and self.bathymetry not in BATHY:
            bad(f"bathymetry must be one of {', '.join(BATHY)}")
        if self.format not in FORMATS:
            bad(f"format must be csv or vtk, got {self.format!r}")
        if self.correction not in CORRECTION:
            bad(f"correction must be 'step' or 'off', got {self.correction!r}")
        if self.interface_buffer < 0:
            bad("interface_buffer must be >= 0")
        if self.initial_cycles is not None and self.initial_cycles < 0:
            bad("initial_cycles must be >= 0")
        if self.circle_r <= 0 or self.rho_in <= 0 or self.rho_out <= 0:
            bad("circle_r, rho_in and rho_out must be positive")
        return self


_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _parse_value(key, raw):
    t = _TYPES[key]
    raw = raw.strip()
    optional = "None" in t
    if optional and raw.lower() in ("auto", "none", ""):
        return None
    try:
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
        if t.startswith("bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    vals = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        vals[key] = _parse_value(key, raw)
    return ScenarioConfig(**vals).validate()


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def dump_config(cfg: ScenarioConfig) -> str:
    """Normalized text: every key, in declaration order; None prints as ``auto``."""
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            s = "auto"
        elif isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v)
        out.append(f"{f.name} = {s}")
    return "\n".join(out) + "\n"
