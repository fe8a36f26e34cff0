"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the NumPy
fallback is used. ``SWVD_BACKEND=numpy`` forces the fallback and
``SWVD_NUM_THREADS`` caps the worker threads of the compiled loops.
"""
import os
import warnings

from . import _fallback

BACKEND = "numpy"
_impl = _fallback

if os.environ.get("SWVD_BACKEND", "").lower() not in ("numpy", "python", "fallback"):
    try:
        from . import _kernels as _compiled
    except ImportError as exc:  # pragma: no cover - depends on the build
        warnings.warn(f"compiled kernels unavailable ({exc}); using NumPy fallback")
    else:
        _impl = _compiled
        BACKEND = "cython"


def _thread_cap():
    raw = os.environ.get("SWVD_NUM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


if BACKEND == "cython":
    _impl.set_num_threads(_thread_cap())


def get_backend(name=None):
    """Return a kernel module by name ('cython' or 'numpy'); default is the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


primitives = _impl.primitives
reconstruct = _impl.reconstruct
fluxes = _impl.fluxes
