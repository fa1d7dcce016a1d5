"""Backend dispatch for the hot kernels.

``bessel_orders``, ``bessel_pairs`` and ``posterior_stats`` resolve to the
numba or pure-numpy build according to ``PHASELAB_BACKEND`` (see
:mod:`phaselab._backend`).  Both builds are importable directly for
equivalence tests and benchmarks.
"""

from . import _backend
from . import _kernels_numpy

ACTIVE_BACKEND = _backend.ACTIVE_BACKEND

if _backend.USE_NUMBA:
    from . import _kernels_numba as _impl
else:
    _impl = _kernels_numpy

bessel_orders = _impl.bessel_orders
bessel_pairs = _impl.bessel_pairs
posterior_stats = _impl.posterior_stats


def backend_name() -> str:
    return ACTIVE_BACKEND
