"""Solver-kernel backend selection.

The compiled extension (``privpack._speedups``) is preferred when it built;
otherwise the NumPy fallback (``privpack._kernels_py``) takes over. The two
are bit-identical by construction (see the fallback's module docstring), so
the choice only affects speed. Set ``PRIVPACK_BACKEND=python`` or
``=compiled`` to force one; forcing ``compiled`` without the extension is an
error rather than a silent fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _speedups
except ImportError:
    _speedups = None

FAIL_NONE = _kernels_py.FAIL_NONE
FAIL_POSITIVITY = _kernels_py.FAIL_POSITIVITY
FAIL_NORM = _kernels_py.FAIL_NORM


def available_backends() -> dict:
    out = {"python": _kernels_py}
    if _speedups is not None:
        out["compiled"] = _speedups
    return out


def get_backend(name: str | None = None):
    """Resolve a backend module by name, env var, or default preference."""
    if name is None:
        name = os.environ.get("PRIVPACK_BACKEND")
    if name is None:
        return _speedups if _speedups is not None else _kernels_py
    backends = available_backends()
    if name not in backends:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; available: {sorted(backends)}"
        )
    return backends[name]


def default_backend_name() -> str:
    return get_backend().BACKEND_NAME
