"""Dispatch to the active kernel backend (see ``mindisc.backend``)."""
from . import _kernels_np
from .backend import USE_NUMBA

if USE_NUMBA:
    from . import _kernels_nb as _impl
else:
    _impl = _kernels_np

pairwise_sqdist = _impl.pairwise_sqdist
condensed_sqdist = _impl.condensed_sqdist
mmd_biased = _impl.mmd_biased
