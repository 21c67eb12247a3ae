"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``LAMB_PURE_PYTHON=1`` to force the fallback.  ``LAMB_THREADS`` caps the
number of worker threads used for batched Poincare orbits (the compiled kernel
releases the GIL).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py

if os.environ.get("LAMB_PURE_PYTHON", "") not in ("", "0"):
    _kernels = _kernels_py
else:
    try:
        from . import _kernels_c as _kernels
    except ImportError:  # extension not built
        _kernels = _kernels_py

BACKEND = "cython" if _kernels is not _kernels_py else "python"


def get_kernels(name: str | None = None):
    """Return the kernel module by name ('cython' / 'python'); default is the active one."""
    if name is None:
        return _kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels_c
        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")


def worker_count() -> int:
    env = os.environ.get("LAMB_THREADS")
    n = os.cpu_count() or 1
    if env:
        n = min(n, max(1, int(env)))
    return n


def poincare_orbits(code, consts, mode, alpha, k, drive, h, steps, n_iter, Y0, record_from,
                    kernels=None):
    kern = kernels or _kernels
    Y0 = np.ascontiguousarray(Y0, dtype=float)
    workers = worker_count() if kern is not _kernels_py else 1
    if workers <= 1 or Y0.shape[0] < 2 * workers:
        return kern.poincare_orbits(code, consts, mode, alpha, k, drive, h, steps, n_iter, Y0,
                                    record_from)
    chunks = np.array_split(Y0, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda Y: kern.poincare_orbits(code, consts, mode, alpha, k, drive, h, steps,
                                           n_iter, Y, record_from), chunks))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))
