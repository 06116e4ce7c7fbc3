"""Numerical kernels with a compiled backend and a pure-Python fallback.

The compiled module is used when it imports; set ``SCENARIOGEN_PURE_PYTHON=1``
to force the fallback.  Both backends return bit-identical results.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SCENARIOGEN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        pass

simulate_kernel = _impl.simulate_kernel
ego_agents_distance = _impl.ego_agents_distance
pairwise_distances = _impl.pairwise_distances

__all__ = ["BACKEND", "simulate_kernel", "ego_agents_distance", "pairwise_distances"]
