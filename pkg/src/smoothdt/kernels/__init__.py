"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built; set ``SMOOTHDT_PURE=1``
to force the fallback. Both backends return bit-identical results.
"""

import os

from . import _pykernels

try:
    if os.environ.get("SMOOTHDT_PURE"):
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

pairwise_sum = _impl.pairwise_sum
subset_sums = _impl.subset_sums
evaluate_tree = _impl.evaluate_tree

__all__ = ["BACKEND", "pairwise_sum", "subset_sums", "evaluate_tree"]
