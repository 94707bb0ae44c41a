"""Kernel backend selection: compiled extension when available, numpy otherwise.

The choice is made once at import. ``RESILIENT_FFT_BACKEND`` may be set to
``compiled``, ``python``, or ``auto`` (the default) to force a backend, and
``set_backend`` switches the process-wide selection at runtime, which the
backend benchmark uses to time both implementations.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _kernels
except ImportError:
    _kernels = None

_MODULES = {"python": _kernels_py}
if _kernels is not None:
    _MODULES["compiled"] = _kernels


def available_backends():
    return tuple(sorted(_MODULES))


def _resolve(name):
    if name == "auto":
        return "compiled" if "compiled" in _MODULES else "python"
    if name not in _MODULES:
        raise RuntimeError(
            f"backend {name!r} is not available (have: {', '.join(available_backends())})"
        )
    return name


_active = _resolve(os.environ.get("RESILIENT_FFT_BACKEND", "auto"))


def active_backend() -> str:
    return _active


def kernel():
    """The module providing ``stockham_pass`` for the active backend."""
    return _MODULES[_active]


def set_backend(name: str) -> str:
    """Switch the active backend; returns the previous one."""
    global _active
    previous = _active
    _active = _resolve(name)
    return previous


@contextmanager
def use_backend(name: str):
    previous = set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
