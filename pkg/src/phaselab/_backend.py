"""Kernel backend selection.

The hot numeric kernels (Bessel evaluation, batched posterior statistics)
exist twice: a numba @njit build and a pure-numpy build with identical
semantics.  The environment variable ``PHASELAB_BACKEND`` picks one:

* ``auto``  (default) -- numba if it imports, numpy otherwise
* ``numba`` -- require numba, raise if unavailable
* ``numpy`` -- force the pure-numpy path

Results of the two backends agree to floating-point rounding (summation
order differs), but bit-for-bit reproducibility is only guaranteed within
one backend.
"""

import os

_ENV_VAR = "PHASELAB_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def requested_backend() -> str:
    value = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if value not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be 'auto', 'numba' or 'numpy', got {value!r}"
        )
    return value


def resolve_backend() -> str:
    """Return the active backend name ('numba' or 'numpy')."""
    value = requested_backend()
    if value == "numba" and not HAS_NUMBA:
        raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
    if value == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    return value


ACTIVE_BACKEND = resolve_backend()
USE_NUMBA = ACTIVE_BACKEND == "numba"
