"""Runtime switches: default series precision and the kernel backend toggle.

Two environment variables are honored:

ULAB_PRECISION
    Default number of known coefficients below exponent 0 for freshly
    sampled or inverted series (default 256).

ULAB_NUMBA
    Set to "0" to disable the numba-compiled kernels and run the pure
    Python/numpy fallbacks instead.  Any other value (or unset) enables
    numba when it is importable.  The flag is read once at import time
    because the kernel functions are bound when ulab.kernels is loaded.
"""

import os

from .errors import ConfigError

_FALLBACK_PRECISION = 256


def default_precision() -> int:
    raw = os.environ.get("ULAB_PRECISION")
    if raw is None or raw.strip() == "":
        return _FALLBACK_PRECISION
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ULAB_PRECISION must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"ULAB_PRECISION must be positive, got {value}")
    return value


def _numba_requested() -> bool:
    return os.environ.get("ULAB_NUMBA", "1").strip() != "0"


USING_NUMBA = False
if _numba_requested():
    try:
        import numba  # noqa: F401

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False


def maybe_njit(**options):
    """Return numba.njit(**options) when enabled, identity decorator otherwise."""
    if USING_NUMBA:
        import numba

        return numba.njit(**options)

    def passthrough(func):
        return func

    return passthrough
