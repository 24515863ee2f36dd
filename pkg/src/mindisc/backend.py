"""Kernel backend selection.

The pairwise-distance and MMD kernels have two interchangeable
implementations: Numba-jitted loops and pure NumPy broadcasting.
The environment variable MINDISC_NUMBA picks one at import time:

    MINDISC_NUMBA=0    force the pure-NumPy path
    MINDISC_NUMBA=1    require Numba (raise if it cannot be imported)
    unset              use Numba when importable, NumPy otherwise
"""
import os

_FALSY = {"0", "false", "no", "off"}

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _select() -> bool:
    flag = os.environ.get("MINDISC_NUMBA", "").strip().lower()
    if flag in _FALSY:
        return False
    if flag:
        if not HAS_NUMBA:
            raise ImportError(
                "MINDISC_NUMBA=%s requires numba, which is not installed" % flag
            )
        return True
    return HAS_NUMBA


USE_NUMBA = _select()


def active_backend() -> str:
    """Name of the kernel implementation in use: 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"
