"""Simulation backend selection.

The compiled extension is preferred when it imported cleanly; the NumPy
kernel is always available. The two are bit-compatible by construction
(see _kernel_numpy), so backend choice never changes results, only speed.
Set TIMEARROW_BACKEND=numpy|cython to force one, or pass backend=... to the
experiment runners.
"""

from __future__ import annotations

import os

from . import _kernel_numpy
from .errors import ValidationError

try:
    from . import _kernel_cy
except ImportError:
    _kernel_cy = None


def available_backends() -> tuple[str, ...]:
    if _kernel_cy is not None:
        return ("cython", "numpy")
    return ("numpy",)


def default_backend() -> str:
    env = os.environ.get("TIMEARROW_BACKEND")
    if env:
        name = env.strip().lower()
        if name not in ("numpy", "cython"):
            raise ValidationError(f"TIMEARROW_BACKEND must be 'numpy' or 'cython', got {env!r}")
        if name == "cython" and _kernel_cy is None:
            raise ValidationError("TIMEARROW_BACKEND=cython but the compiled kernel is not importable")
        return name
    return "cython" if _kernel_cy is not None else "numpy"


def get_kernel(backend: str | None = None):
    """Return the em_chunk callable for `backend` (default: best available)."""
    name = backend if backend is not None else default_backend()
    if name == "numpy":
        return _kernel_numpy.em_chunk
    if name == "cython":
        if _kernel_cy is None:
            raise ValidationError("compiled kernel requested but not importable; rebuild or use backend='numpy'")
        return _kernel_cy.em_chunk
    raise ValidationError(f"unknown backend {name!r}; expected 'numpy' or 'cython'")
