"""Numba toggle for the hot kernels.

Kernels compile with @njit when numba is importable and the AIRCELL_NUMBA
environment variable is unset or not "0"; otherwise the pure-numpy fallbacks
run. The flag is read once at import.
"""
import os

NUMBA_ENV_VAR = "AIRCELL_NUMBA"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on install extras
    njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(NUMBA_ENV_VAR, "1") != "0"
