"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``BLOCKCOH_DISABLE_NUMBA=1`` in the environment before import to force
the numpy path (useful for debugging and for the kernel benchmark).
"""

import os

NUMBA_ENABLED = False
if os.environ.get("BLOCKCOH_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes"):
    try:
        import numba

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def jit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` when numba is enabled."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(fn)
    return fn


def py_func(fn):
    """Return the interpreted version of a possibly-jitted function."""
    return getattr(fn, "py_func", fn)
