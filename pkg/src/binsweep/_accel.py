"""Numba switch for the hot loops.

Set ``BINSWEEP_DISABLE_NUMBA=1`` to run every kernel through its pure
numpy/Python path.  The flag is read once at import time.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("BINSWEEP_DISABLE_NUMBA", "").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not NUMBA_DISABLED


def jit(fn):
    """Compile ``fn`` in nopython mode when numba is active, else return it."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def python_impl(fn):
    """The uncompiled source of a (possibly) jitted function."""
    return getattr(fn, "py_func", fn)
