"""Snapshot output: per-cell CSV and legacy ASCII VTK unstructured grids."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import SwvdError
from .interface import MIXED
from .reconstruction import desingularization_tau, primitive_centers

CSV_COLUMNS = ("id", "x", "y", "level", "class", "w", "hu", "hv", "hrho", "rho", "phi", "f",
               "i1x", "i1y", "i2x", "i2y")
CLASS_NAMES = {0: "mixed", 1: "fluid1", 2: "fluid2"}


class SnapshotIOError(SwvdError, OSError):
    pass


def snapshot_table(sim):
    """Dict of per-cell columns for a :class:`~swvd.driver.Simulation`-like object."""
    mesh, U, iface = sim.mesh, sim.U, sim.iface
    cfg = sim.cfg
    tau = desingularization_tau(mesh) if cfg.tau is None else cfg.tau
    rho = primitive_centers(U[:, :4], sim.bathy.center, tau, cfg.eps, cfg.rho0)[:, 3]
    ends = np.full((mesh.n_cells, 4), np.nan)
    if iface is not None and np.any(iface.cls == MIXED):
        cells, _, _, e = iface.segments(mesh)
        ends[cells] = e.reshape(len(cells), 4)
    return {
        "id": np.arange(mesh.n_cells), "x": mesh.bary[:, 0], "y": mesh.bary[:, 1],
        "level": np.asarray(sim.am.tree_level), "class": np.asarray(iface.cls),
        "w": U[:, 0], "hu": U[:, 1], "hv": U[:, 2], "hrho": U[:, 3], "rho": rho,
        "phi": U[:, 4], "f": U[:, 5],
        "i1x": ends[:, 0], "i1y": ends[:, 1], "i2x": ends[:, 2], "i2y": ends[:, 3],
    }


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if np.isnan(v) else f"{v:.17g}"


def write_csv(table, path):
    path = Path(path)
    n = len(table["id"])
    try:
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(CSV_COLUMNS)
            cols = [table[c] for c in CSV_COLUMNS]
            for i in range(n):
                row = [_fmt(c[i]) for c in cols]
                row[4] = CLASS_NAMES[int(cols[4][i])]
                wr.writerow(row)
    except OSError as exc:
        raise SnapshotIOError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Columns of a snapshot CSV as arrays (classification as strings)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for c in CSV_COLUMNS:
        vals = [r[c] for r in rows]
        if c == "class":
            out[c] = np.array(vals)
        elif c in ("id", "level"):
            out[c] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            out[c] = np.array([float(v) if v != "" else np.nan for v in vals])
    return out


def write_vtk(mesh, table, path, title="swvd snapshot"):
    path = Path(path)
    try:
        with path.open("w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write(title[:255] + "\n")
            fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {mesh.n_vertices} double\n")
            for x, y in mesh.vertices:
                fh.write(f"{x:.17g} {y:.17g} 0\n")
            nc = mesh.n_cells
            fh.write(f"CELLS {nc} {4 * nc}\n")
            for a, b, c in mesh.cells:
                fh.write(f"3 {a} {b} {c}\n")
            fh.write(f"CELL_TYPES {nc}\n")
            fh.write("5\n" * nc)
            fh.write(f"CELL_DATA {nc}\n")
            for name in ("level", "class"):
                fh.write(f"SCALARS {name} int 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(str(int(v)) for v in table[name]) + "\n")
            for name in ("w", "hu", "hv", "hrho", "rho", "phi", "f"):
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(f"{v:.17g}" for v in table[name]) + "\n")
    except OSError as exc:
        raise SnapshotIOError(f"cannot write {path}: {exc}") from exc


def write_snapshot(sim, path, fmt="csv"):
    table = snapshot_table(sim)
    if fmt == "csv":
        write_csv(table, path)
    elif fmt == "vtk":
        write_vtk(sim.mesh, table, path, f"swvd t={sim.t:.17g}")
    else:
        raise SnapshotIOError(f"unknown snapshot format {fmt!r}")
    return Path(path)
