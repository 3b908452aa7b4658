"""Select the numeric backend for the hot kernels.

Numba is used when it is importable and ``SPATIALCOV_NUMBA`` is not set to
``0``/``false``/``off``/``no``. Otherwise every kernel runs its pure-numpy twin.
The flag is read once, at import time.
"""

import importlib.util
import os


def numba_requested(flag: str | None) -> bool:
    return (flag or "1").strip().lower() not in ("0", "false", "off", "no")


def numba_importable() -> bool:
    return importlib.util.find_spec("numba") is not None


try:
    if not numba_requested(os.environ.get("SPATIALCOV_NUMBA")):
        raise ImportError("numba disabled by SPATIALCOV_NUMBA")
    import numba  # noqa: F401
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit and @njit(...) both become no-ops
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


BACKEND = "numba" if HAVE_NUMBA else "numpy"
