"""Initial data presets: bathymetries, interface curves and piecewise states."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError


def flat(x, y):
    return np.zeros_like(np.asarray(x, dtype=np.float64))


def two_humps(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    left = 0.5 * np.exp(-100.0 * ((x + 0.5) ** 2 + (y + 0.5) ** 2))
    right = 0.6 * np.exp(-100.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2))
    return np.where(x < 0, left, right)


def central_hump(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return 0.5 * np.exp(-100.0 * (x * x + y * y))


BATHYMETRIES = {"flat": flat, "humps": two_humps, "hump": central_hump}


def circle_sdf(cx, cy, r):
    """Signed distance, positive inside the circle."""
    def sdf(x, y):
        return r - np.hypot(np.asarray(x) - cx, np.asarray(y) - cy)
    return sdf


def _seg_dist(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def corner_sdf(x, y):
    """Signed distance to the horizontal segment / quarter circle / vertical segment curve.

    Positive inside {x<-0.5, y<0} u {(x+0.5)^2+(y+0.5)^2<0.25} u {x<0, y<-0.5}.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d1 = _seg_dist(x, y, -1.0, 0.0, -0.5, 0.0)
    d2 = _seg_dist(x, y, 0.0, -1.0, 0.0, -0.5)
    rx, ry = x + 0.5, y + 0.5
    rr = np.hypot(rx, ry)
    on_arc = (rx >= 0) & (ry >= 0)
    d3 = np.where(on_arc, np.abs(rr - 0.5),
                  np.minimum(np.hypot(x + 0.5, y), np.hypot(x, y + 0.5)))
    d = np.minimum(np.minimum(d1, d2), d3)
    inside = ((x < -0.5) & (y < 0)) | (rr * rr < 0.25) | ((x < 0) & (y < -0.5))
    return np.where(inside, d, -d)


@dataclass
class Scenario:
    name: str
    sdf: Callable                 # > 0 in fluid 1
    inside: tuple                 # (w, u, v, rho) in fluid 1
    outside: tuple                # (w, u, v, rho) in fluid 2
    bathymetry: str
    t_end: float
    sigma_tol: float

    @property
    def rho1(self):
        return float(self.inside[3])

    @property
    def rho2(self):
        return float(self.outside[3])

    def primitive(self, x, y):
        """(n, 4) point values of (w, u, v, rho)."""
        pos = np.asarray(self.sdf(x, y)) > 0
        a = np.asarray(self.inside, dtype=np.float64)
        b = np.asarray(self.outside, dtype=np.float64)
        return np.where(pos[:, None], a[None, :], b[None, :])


def make_scenario(cfg) -> Scenario:
    """Scenario for a :class:`~swvd.config.ScenarioConfig`."""
    r0 = cfg.rho0
    name = cfg.scenario
    if name in ("example1-flat", "example1-humps"):
        sc = Scenario(name, circle_sdf(0.0, 0.0, np.sqrt(0.5)), (2.0, 0.0, 0.0, 1.5 * r0),
                      (1.0, 0.0, 0.0, r0), "flat" if name == "example1-flat" else "humps",
                      0.15 if name == "example1-flat" else 0.2, 0.01)
    elif name == "example2":
        sc = Scenario(name, circle_sdf(0.0, 0.0, 0.5), (3.0, 0.0, 0.0, 4.0 / 3.0 * r0),
                      (2.0, 0.0, 0.0, 3.0 * r0), "humps", 0.15, 0.1)
    elif name == "example3":
        sc = Scenario(name, corner_sdf, (2.0, 0.0, 0.0, r0), (1.0, 0.0, 0.0, 1.5 * r0),
                      "hump", 0.15, 0.01)
    elif name == "custom":
        sc = Scenario(name, circle_sdf(cfg.circle_x, cfg.circle_y, cfg.circle_r),
                      (cfg.w_in, 0.0, 0.0, cfg.rho_in * r0), (cfg.w_out, 0.0, 0.0, cfg.rho_out * r0),
                      "flat", 0.1, 0.01)
    else:
        raise ConfigError(f"unknown scenario {name!r}")
    return sc
