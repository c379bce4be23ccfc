"""Numba acceleration switch.

The hot simulation kernels are written once as scalar loops and compiled with
``numba.njit``.  Setting the environment variable ``DIVBARRIER_NUMBA=0``
selects the pure-numpy fallback kernels instead (useful for debugging and for
the backend benchmark).  The flag is read at import time.
"""

import os

_flag = os.environ.get("DIVBARRIER_NUMBA", "auto").strip().lower()

if _flag in ("0", "false", "no", "off"):
    NUMBA_ENABLED = False
elif _flag in ("1", "true", "yes", "on"):
    NUMBA_ENABLED = True
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    from numba import njit, prange
else:

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper

    def prange(n):
        return range(n)


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
