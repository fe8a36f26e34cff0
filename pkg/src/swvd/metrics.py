"""Error norms against a reference solution on a finer uniform mesh."""
from __future__ import annotations

import numpy as np

from .errors import ReportError
from .mesh import TriMesh, locate_uniform

VARIABLES = ("w", "hu", "hv", "hrho")


def l1_error(U, mesh: TriMesh, U_ref, ref_mesh: TriMesh):
    """sum_j |T_j| |U_j - U_ref(cell containing the barycentre of T_j)| per variable."""
    if U_ref is None or ref_mesh is None:
        raise ReportError("reference solution missing")
    uni = getattr(ref_mesh, "uniform", None)
    if uni is not None:
        idx = locate_uniform(uni, mesh.bary)
    else:
        idx = ref_mesh.locate(mesh.bary)
        if np.any(idx < 0):
            raise ReportError("barycentre outside the reference mesh")
    d = np.abs(np.asarray(U)[:, :4] - np.asarray(U_ref)[idx, :4])
    err = (mesh.area[:, None] * d).sum(axis=0)
    return dict(zip(VARIABLES, map(float, err)))


def convergence_rates(errors):
    """log2(e_N / e_2N) for consecutive entries of a sequence of errors."""
    e = np.asarray(errors, dtype=np.float64)
    return [float(np.log2(a / b)) for a, b in zip(e[:-1], e[1:])]
