"""Kernel backend selection: numba JIT by default, pure numpy on demand.

The active backend is chosen once, lazily, from the ``CONVEXSIM_BACKEND``
environment variable (``auto`` | ``numba`` | ``numpy``; default ``auto``,
which means numba when importable). Tests and the benchmark switch at
runtime with :func:`set_backend`.
"""

from __future__ import annotations

import os
import warnings

_VALID = ("auto", "numba", "numpy")
_active: str | None = None


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _resolve(raw: str) -> str:
    if raw == "numba":
        if not numba_available():
            raise RuntimeError("CONVEXSIM_BACKEND=numba but numba is not importable")
        return "numba"
    if raw == "numpy":
        return "numpy"
    return "numba" if numba_available() else "numpy"


def get_backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    global _active
    if _active is None:
        raw = os.environ.get("CONVEXSIM_BACKEND", "auto").strip().lower()
        if raw not in _VALID:
            warnings.warn(
                f"ignoring unknown CONVEXSIM_BACKEND={raw!r}; using 'auto'",
                stacklevel=2,
            )
            raw = "auto"
        _active = _resolve(raw)
    return _active


def set_backend(name: str) -> None:
    """Force the kernel backend; 'auto' re-resolves from availability."""
    global _active
    name = name.strip().lower()
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    _active = _resolve(name)
