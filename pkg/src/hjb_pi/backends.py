"""Kernel backend selection: compiled extension when importable, else Python.

The compiled module is preferred at import time.  Set HJB_PI_PURE_PYTHON=1
in the environment (before import) to force the fallback, or call
set_backend() to switch explicitly, e.g. for benchmarking both.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def _initial_choice():
    if os.environ.get("HJB_PI_PURE_PYTHON", "0") not in ("", "0"):
        return _kernels_py
    return _compiled if _compiled is not None else _kernels_py


_active = _initial_choice()


def compiled_available() -> bool:
    return _compiled is not None


def active_backend():
    """Module providing thomas_solve and sor_sweep."""
    return _active


def backend_name() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def set_backend(name: str) -> None:
    """Select 'compiled', 'python', or 'auto' (availability plus env var)."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel extension is not available")
        _active = _compiled
    elif name == "auto":
        _active = _initial_choice()
    else:
        raise ValueError(f"unknown backend {name!r}")
