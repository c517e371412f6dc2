"""Rollout kernel selection.

The compiled extension (planarpush._kernels, Cython) accelerates the MPC
rollout inner loop; a pure-Python path implements identical semantics.
Selection happens at import time and can be forced with the environment
variable PLANARPUSH_BACKEND in {auto, compiled, python}.
"""
from __future__ import annotations

import os

_kernels = None
_requested = os.environ.get("PLANARPUSH_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(f"PLANARPUSH_BACKEND must be auto|compiled|python, got {_requested!r}")

if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as _kernels  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "PLANARPUSH_BACKEND=compiled but the planarpush._kernels "
                "extension is not built; reinstall with a C compiler and Cython"
            )
        _kernels = None


def has_compiled() -> bool:
    return _kernels is not None


def backend_name() -> str:
    return "compiled" if _kernels is not None else "python"


def compiled_kernels():
    """The compiled kernel module, or None when using the Python fallback."""
    return _kernels
