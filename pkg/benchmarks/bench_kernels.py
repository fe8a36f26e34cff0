"""Compare the compiled and NumPy kernels on one full right-hand-side evaluation.

    python benchmarks/bench_kernels.py [--n 200] [--repeat 5]

Both backends evaluate dU/dt for the same dam-break state; the script
prints the best wall time per backend, the speedup and the largest
difference between the two results.
"""
import argparse
import time

import numpy as np

from swvd import kernels
from swvd.config import ScenarioConfig
from swvd.cu import PhysicsParams, SpatialOperator
from swvd.driver import Simulation


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200, help="uniform mesh 2 x n x n")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    sim = Simulation(ScenarioConfig(nx=args.n, ny=args.n, t_end=0.0))
    U = sim.U.copy()
    mixed = sim.iface.cls == 0
    params = PhysicsParams()
    results = {}
    for name in ("cython", "numpy"):
        try:
            op = SpatialOperator(sim.mesh, sim.bathy, params, backend=name)
        except ImportError:
            print(f"{name:7s} unavailable")
            continue
        op.set_mixed(mixed)
        t = best_time(lambda: op.rhs(U), args.repeat)
        results[name] = (t, op.rhs(U).copy())
        print(f"{name:7s} {t * 1e3:10.2f} ms per rhs ({sim.mesh.n_cells} cells)")
    if len(results) == 2:
        (tc, dc), (tn, dn) = results["cython"], results["numpy"]
        scale = np.abs(dn).max(axis=0) + 1e-300
        print(f"speedup {tn / tc:.1f}x, threads {kernels.get_backend('cython').get_num_threads()}")
        print(f"max relative difference {float((np.abs(dc - dn).max(axis=0) / scale).max()):.2e}")


if __name__ == "__main__":
    main()
