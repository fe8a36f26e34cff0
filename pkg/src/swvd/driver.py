"""Simulation driver: initial data, global step loop, remeshing and reporting.

Global step order: advance all levels to t^{n+1} (with refluxing), compute
the weak local residual on the old mesh, flag and remesh, project onto the
new mesh, classify cells and apply the cell-average correction.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .amr import (COARSEN, KEEP, ProjectionStats, apply_flags, flag, interface_flags, project,
                  wlr_errors)
from .config import ScenarioConfig
from .cu import PhysicsParams, SpatialOperator
from .errors import SwvdError
from .hierarchy import ActiveMesh, MeshHierarchy
from .interface import (MIXED, InterfaceState, correct_cell_averages, initial_fraction,
                        reset_mixed_cells)
from .mesh import build_uniform, sample_bathymetry
from .scenarios import BATHYMETRIES, make_scenario
from .timeint import LocalStepper, StepStats

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    t_final: float = 0.0
    steps: int = 0
    cells: list = field(default_factory=list)       # (t, active cells)
    time_evolution: float = 0.0
    time_grid: float = 0.0
    time_total: float = 0.0
    min_depth: float = np.inf
    min_hrho: float = np.inf
    substeps: int = 0
    halvings: int = 0
    reflux_skipped: int = 0
    projection: ProjectionStats = field(default_factory=ProjectionStats)
    errors: dict = field(default_factory=dict)
    rates: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    r_cpu: float | None = None

    @property
    def max_cells(self):
        return max((c for _, c in self.cells), default=0)

    @property
    def mean_cells(self):
        return float(np.mean([c for _, c in self.cells])) if self.cells else 0.0


def uniform_active(mesh, bathy) -> ActiveMesh:
    n = mesh.n_cells
    return ActiveMesh(mesh, bathy, np.arange(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                      np.arange(mesh.n_vertices), np.zeros(n, dtype=np.int64))


def initial_state(am: ActiveMesh, scenario):
    """Six-column averages by barycentre sampling; f from the clipped area fraction."""
    m = am.mesh
    x, y = m.bary[:, 0], m.bary[:, 1]
    P = scenario.primitive(x, y)
    h = np.maximum(P[:, 0] - am.bathy.center, 0.0)
    U = np.empty((m.n_cells, 6))
    U[:, 0] = np.maximum(P[:, 0], am.bathy.center)
    U[:, 1] = h * P[:, 1]
    U[:, 2] = h * P[:, 2]
    U[:, 3] = h * P[:, 3]
    U[:, 4] = scenario.sdf(x, y)
    U[:, 5] = initial_fraction(m, scenario.sdf)
    return U


class Simulation:
    def __init__(self, cfg: ScenarioConfig, record_stages: bool = False):
        self.cfg = cfg = cfg.validate().resolved()
        self.scenario = make_scenario(cfg)
        self.bfn = BATHYMETRIES[cfg.bathymetry]
        self.params = PhysicsParams(cfg.g, cfg.rho0, cfg.sigma)
        self.record_stages = record_stages
        self.report = RunReport()
        self.stage_minima = []
        self.t = 0.0
        self.adaptive = cfg.max_level > 0
        t0 = time.perf_counter()
        base = build_uniform(cfg.nx, cfg.ny, cfg.domain())
        if self.adaptive:
            self.tree = MeshHierarchy(base, self.bfn, cfg.max_level)
            self.am = self.tree.active()
        else:
            self.tree = None
            self.am = uniform_active(base, sample_bathymetry(self.bfn, base))
        self._initialize()
        if self.adaptive:
            for _ in range(cfg.initial_cycles):
                if not self._initial_cycle():
                    break
        self.setup_time = time.perf_counter() - t0
        self.report.time_grid += self.setup_time
        self.report.cells.append((0.0, self.mesh.n_cells))

    # -- setup ------------------------------------------------------------------------

    @property
    def mesh(self):
        return self.am.mesh

    @property
    def bathy(self):
        return self.am.bathy

    def _initialize(self):
        self.U = initial_state(self.am, self.scenario)
        self.iface = InterfaceState(self.U[:, 4], self.U[:, 5], self.scenario.rho1, self.scenario.rho2)
        self.iface.update(self.mesh)
        self._correct()
        self._build_operator()

    def _build_operator(self):
        self.op = SpatialOperator(self.mesh, self.bathy, self.params, tau=self.cfg.tau, eps=self.cfg.eps)
        self.op.set_mixed(self.iface.cls == MIXED)
        self.stepper = LocalStepper(self.op, record_stages=self.record_stages,
                                    dt_still=self.cfg.dt_still, reflux=self.cfg.reflux)

    def _correct(self):
        if self.cfg.mixed_reset:
            self.U = reset_mixed_cells(self.U, self.iface.cls, self.bathy.center, self.mesh,
                                       self.iface.diagnostics)
        if self.cfg.correction == "step":
            self.U = correct_cell_averages(self.U, self.iface.cls, self.iface.rho1, self.iface.rho2,
                                           self.bathy.center, self.mesh, self.iface.diagnostics)
        self.iface.phi = self.U[:, 4]
        self.iface.f = self.U[:, 5]

    def _flags(self, U0, U1, dt, cls, allow_coarsen=True):
        cfg = self.cfg
        w = wlr_errors(U0, U1, self.mesh, dt, self.bathy.center)
        fl = flag(w, cfg.sigma_tol, self.am.tree_level, cfg.max_level, cfg.coarsen_factor,
                  cfg.wlr_floor)
        if not allow_coarsen:
            fl[fl == COARSEN] = KEEP
        fl, protect = interface_flags(fl, self.am, cls, cfg.interface_buffer)
        return fl, protect, w

    def _initial_cycle(self):
        """Trial step, flag, refine, then re-sample the initial data on the refined mesh."""
        U1, st = self.stepper.step(self.U, self.cfg.t_end if self.cfg.t_end > 0 else np.inf)
        fl, protect, _ = self._flags(self.U, U1, st.dt, self.iface.cls, allow_coarsen=False)
        nr, _ = apply_flags(self.tree, self.am, fl, self.iface.cls, protect)
        if nr == 0:
            return False
        self.am = self.tree.active()
        self._initialize()
        return True

    # -- stepping ---------------------------------------------------------------------

    def step(self, dt_max=np.inf) -> StepStats:
        t0 = time.perf_counter()
        U0 = self.U
        try:
            U1, st = self.stepper.step(U0, dt_max)
        except SwvdError as exc:
            raise type(exc)(f"step {self.report.steps + 1} at t={self.t:.6g}: {exc}") from exc
        np.clip(U1[:, 5], 0.0, 1.0, out=U1[:, 5])
        tmp = InterfaceState(U1[:, 4], U1[:, 5], self.iface.rho1, self.iface.rho2,
                             diagnostics=self.iface.diagnostics)
        tmp.update(self.mesh)
        changed = False
        tg = 0.0
        if self.adaptive:
            t1 = time.perf_counter()
            fl, protect, _ = self._flags(U0, U1, st.dt, tmp.cls)
            apply_flags(self.tree, self.am, fl, tmp.cls, protect)
            new = self.tree.active()
            if len(new.keys) != len(self.am.keys) or np.any(new.keys != self.am.keys):
                U1, tmp, _ = project(self.tree, self.am, U1, new, tmp.cls, tmp, self.report.projection)
                self.am = new
                changed = True
            tg = time.perf_counter() - t1
        self.U = U1
        self.iface = tmp
        self._correct()
        if changed:
            t2 = time.perf_counter()
            self._build_operator()
            tg += time.perf_counter() - t2
        else:
            self.op.set_mixed(self.iface.cls == MIXED)
        self.report.time_grid += tg
        self.report.time_evolution += time.perf_counter() - t0 - tg
        self.t += st.dt
        r = self.report
        r.steps += 1
        r.t_final = self.t
        r.min_depth = min(r.min_depth, st.min_depth)
        r.min_hrho = min(r.min_hrho, st.min_hrho)
        r.substeps += sum(st.substeps.values())
        r.halvings += st.halvings
        r.reflux_skipped += st.reflux_skipped
        r.cells.append((self.t, self.mesh.n_cells))
        if self.record_stages:
            self.stage_minima.append(st.stage_minima)
        return st

    def run(self, out_dir=None, fmt=None, snapshots=None, callback=None) -> RunReport:
        from .io import write_snapshot
        cfg = self.cfg
        fmt = fmt or cfg.format
        nsnap = cfg.snapshots if snapshots is None else snapshots
        t_end = cfg.t_end
        marks = [t_end * k / nsnap for k in range(1, nsnap + 1)] if nsnap > 0 else [t_end]
        out = Path(out_dir) if out_dir is not None else None
        start = time.perf_counter()

        def snap():
            if out is None:
                return
            out.mkdir(parents=True, exist_ok=True)
            p = out / f"snapshot_{len(self.report.snapshots):04d}.{fmt}"
            write_snapshot(self, p, fmt)
            self.report.snapshots.append(str(p))

        snap()
        tol = 1e-12 * max(t_end, 1.0)
        capped = False
        for mark in marks:
            while self.t < mark - tol:
                if cfg.max_steps and self.report.steps >= cfg.max_steps:
                    capped = True
                    break
                self.step(mark - self.t)
                if callback is not None:
                    callback(self)
            if capped:
                break
            if t_end > 0:
                snap()
        if capped:
            snap()
        self.report.time_total = self.setup_time + time.perf_counter() - start
        return self.report


def run(cfg: ScenarioConfig, out_dir=None, fmt=None, snapshots=None) -> tuple[Simulation, RunReport]:
    sim = Simulation(cfg)
    rep = sim.run(out_dir, fmt, snapshots)
    return sim, rep
