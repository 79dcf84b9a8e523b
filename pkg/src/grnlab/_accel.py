"""Kernel acceleration toggle.

Hot loops are compiled with numba by default.  Setting the environment
variable ``GRNLAB_NO_NUMBA=1`` (checked once, at import) selects the pure
NumPy/Python fallbacks instead; results are identical, only slower.
"""

import os


def _numba_disabled() -> bool:
    return os.environ.get("GRNLAB_NO_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
        "on",
    )


NUMBA_ENABLED = False
if not _numba_disabled():
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def maybe_njit(**options):
    """Return ``numba.njit(**options)`` when enabled, else a no-op decorator."""
    if NUMBA_ENABLED:
        import numba

        return numba.njit(**options)

    def identity(fn):
        return fn

    return identity
