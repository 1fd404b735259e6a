"""Backend selection for the stepping kernels.

The compiled extension is used when importable; setting the environment
variable ``MCF_LAB_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_force_py = os.environ.get("MCF_LAB_PURE_PYTHON", "") not in ("", "0")

_compiled = None
if not _force_py:
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    name = name or BACKEND
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def advance(u, ap, am, c, f, h, eta, k, beta0, p_bdry, central_ghost, dt,
            nsteps, work=None, backend: str | None = None) -> float:
    mod = get_backend(backend)
    if work is None:
        work = np.empty_like(u)
    return float(mod.advance(u, ap, am, c, f, float(h), float(eta), float(k),
                             float(beta0), float(p_bdry), bool(central_ghost),
                             float(dt), int(nsteps), work))


def dp_advance(V, idx, wt, reward, nsteps, work=None,
               backend: str | None = None):
    mod = get_backend(backend)
    if work is None:
        work = np.empty_like(V)
    return mod.dp_advance(V, idx, wt, reward, int(nsteps), work)
