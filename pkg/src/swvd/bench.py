"""Paired uniform/adaptive runs: CPU-time ratios and convergence sweeps."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

from .config import ScenarioConfig
from .driver import Simulation
from .errors import ConfigError
from .metrics import VARIABLES, convergence_rates, l1_error


@dataclass
class BenchmarkResult:
    levels: int
    uniform_n: int
    base_n: int
    uniform_time: float
    uniform_cells: int
    adaptive_time: float
    adaptive_grid_time: float
    adaptive_max_cells: int
    adaptive_mean_cells: float

    @property
    def r_cpu_total(self):
        return self.uniform_time / self.adaptive_time

    @property
    def r_cpu_evolution(self):
        """Ratio with the adaptive grid-generation time left out."""
        return self.uniform_time / max(self.adaptive_time - self.adaptive_grid_time, 1e-300)

    def table(self) -> str:
        rows = [
            ("mode", "cells(max)", "cells(mean)", "time[s]", "time-grid[s]"),
            (f"uniform 2x{self.uniform_n}x{self.uniform_n}", str(self.uniform_cells),
             str(self.uniform_cells), f"{self.uniform_time:.3f}", f"{self.uniform_time:.3f}"),
            (f"adaptive M={self.levels} from 2x{self.base_n}x{self.base_n}",
             str(self.adaptive_max_cells), f"{self.adaptive_mean_cells:.0f}",
             f"{self.adaptive_time:.3f}", f"{self.adaptive_time - self.adaptive_grid_time:.3f}"),
        ]
        width = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, width)) for r in rows]
        lines.append(f"R_CPU total {self.r_cpu_total:.3f}  without grid {self.r_cpu_evolution:.3f}")
        return "\n".join(lines)


def _timed(cfg):
    t0 = time.perf_counter()
    sim = Simulation(cfg)
    rep = sim.run()
    return sim, rep, time.perf_counter() - t0


def benchmark(cfg: ScenarioConfig, levels: int) -> BenchmarkResult:
    """Uniform run at nx*2^M against the adaptive run from nx with M levels."""
    if levels < 1:
        raise ConfigError("benchmark needs at least one refinement level")
    cfg = cfg.validate()
    base = dataclasses.replace(cfg, max_level=levels, snapshots=0)
    uni = dataclasses.replace(cfg, max_level=0, snapshots=0,
                              nx=cfg.nx * 2 ** levels, ny=cfg.ny * 2 ** levels)
    _, ru, tu = _timed(uni)
    _, ra, ta = _timed(base)
    return BenchmarkResult(levels, uni.nx, cfg.nx, tu, ru.max_cells, ta, ra.time_grid,
                           ra.max_cells, ra.mean_cells)


@dataclass
class ConvergenceResult:
    levels: list
    reference_n: int
    errors: list = field(default_factory=list)       # one dict per level
    cells: list = field(default_factory=list)
    times: list = field(default_factory=list)

    def rates(self, var="w"):
        return convergence_rates([e[var] for e in self.errors])

    def table(self) -> str:
        head = "N      cells    " + "  ".join(f"L1({v})".ljust(14) for v in VARIABLES) + "  rate(w)"
        lines = [head]
        rates = [None] + self.rates()
        for n, c, e, r in zip(self.levels, self.cells, self.errors, rates):
            vals = "  ".join(f"{e[v]:<14.6e}" for v in VARIABLES)
            lines.append(f"{n:<6d} {c:<8d} {vals}  {'' if r is None else f'{r:.3f}'}")
        lines.append(f"reference: uniform 2x{self.reference_n}x{self.reference_n}")
        return "\n".join(lines)


def convergence(cfg: ScenarioConfig, levels, reference=None) -> ConvergenceResult:
    """L1 errors at finest resolutions ``levels`` against a finer uniform reference.

    With ``max_level`` M > 0 each entry N is run adaptively from a 2 x N/2^M x N/2^M
    base mesh. ``reference`` is a resolution (default twice the finest level)
    or a ``(U, mesh)`` pair computed elsewhere.
    """
    levels = sorted(int(n) for n in levels)
    if not levels or levels[0] < 1:
        raise ConfigError("convergence levels must be positive integers")
    cfg = dataclasses.replace(cfg.validate(), snapshots=0)
    M = cfg.max_level
    for n in levels:
        if n % 2 ** M:
            raise ConfigError(f"level {n} is not divisible by 2^max_level = {2 ** M}")
    aspect = cfg.ny / cfg.nx
    if reference is None or isinstance(reference, int):
        nref = reference or 2 * levels[-1]
        rc = dataclasses.replace(cfg, max_level=0, nx=nref, ny=max(1, round(nref * aspect)))
        rsim, _, _ = _timed(rc)
        U_ref, ref_mesh = rsim.U, rsim.mesh
    else:
        U_ref, ref_mesh = reference
        nref = getattr(ref_mesh, "uniform", (0,))[0]
    out = ConvergenceResult(levels, int(nref))
    for n in levels:
        c = dataclasses.replace(cfg, nx=n // 2 ** M, ny=max(1, round(n * aspect)) // 2 ** M)
        sim, rep, t = _timed(c)
        out.errors.append(l1_error(sim.U, sim.mesh, U_ref, ref_mesh))
        out.cells.append(rep.max_cells)
        out.times.append(t)
    return out
