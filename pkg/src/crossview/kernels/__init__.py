"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the CROSSVIEW_BACKEND
environment variable: "numba" (default when numba imports cleanly) or
"numpy". Both backends expose the same functions; `benchmarks/` compares
their throughput.
"""

import os
import warnings

from . import _numpy

_requested = os.environ.get("CROSSVIEW_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    warnings.warn(
        f"unrecognized CROSSVIEW_BACKEND={_requested!r}; choosing automatically",
        stacklevel=2,
    )
    _requested = ""

_impl = None
if _requested != "numpy":
    try:
        from . import _numba as _impl
    except ImportError:
        if _requested == "numba":
            warnings.warn(
                "CROSSVIEW_BACKEND=numba but numba is not importable; "
                "falling back to the numpy backend",
                stacklevel=2,
            )
        _impl = None
if _impl is None:
    _impl = _numpy


def active_backend():
    """Name of the backend selected at import time."""
    return "numpy" if _impl is _numpy else "numba"


def get_backend(name):
    """Fetch a backend module by name ("numpy" or "numba") for benchmarks."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown backend {name!r}")


conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward
bilinear_sample = _impl.bilinear_sample
nearest_sample = _impl.nearest_sample
cyclic_corr = _impl.cyclic_corr
