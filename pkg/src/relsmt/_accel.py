"""Switch between numba-compiled kernels and their pure-numpy fallbacks.

Set ``RELSMT_DISABLE_NUMBA=1`` in the environment to force the numpy path,
e.g. for debugging or on platforms without a working numba install.
"""

import os

_FLAG = "RELSMT_DISABLE_NUMBA"


def _numba_available():
    if os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_available()


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise a no-op decorator."""
    if USE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper
