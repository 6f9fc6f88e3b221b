"""Hot inner-loop kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the ``FAMDIFF_KERNELS``
environment variable: ``numba`` (default when importable), ``numpy``, or
``auto``. Both backends implement the same arithmetic in the same order, so
results agree bit-for-bit; ``famdiff bench-kernels`` compares their speed.
"""

import os
import warnings

from famdiff.errors import ParameterError

from . import _numpy

_ENV = "FAMDIFF_KERNELS"
_active = _numpy
_active_name = "numpy"


def _load(name: str):
    if name == "numpy":
        return _numpy, "numpy"
    from . import _numba

    return _numba, "numba"


def set_backend(name: str) -> str:
    """Select the kernel backend (``numba`` or ``numpy``). Returns the old name."""
    global _active, _active_name
    if name not in ("numba", "numpy"):
        raise ParameterError(f"unknown kernel backend {name!r}")
    old = _active_name
    _active, _active_name = _load(name)
    return old


def active_backend() -> str:
    return _active_name


def _init_from_env() -> None:
    requested = os.environ.get(_ENV, "auto").strip().lower() or "auto"
    if requested == "numpy":
        set_backend("numpy")
        return
    try:
        set_backend("numba")
    except ImportError:
        if requested == "numba":
            raise
        warnings.warn("numba unavailable, falling back to numpy kernels")
        set_backend("numpy")


def nearest_upsample(src, out_h, out_w, align_corners):
    return _active.nearest_upsample(src, out_h, out_w, align_corners)


def bilinear_upsample(src, out_h, out_w, align_corners):
    return _active.bilinear_upsample(src, out_h, out_w, align_corners)


def conv3x3_circular(src, weights, bias):
    return _active.conv3x3_circular(src, weights, bias)


_init_from_env()
