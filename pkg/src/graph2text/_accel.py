"""Optional numba acceleration.

Set ``GRAPH2TEXT_NUMBA=0`` to force the pure-numpy kernels (also used
automatically when numba is not importable).
"""

import os

_FLAG = os.environ.get("GRAPH2TEXT_NUMBA", "1").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)
