"""Hot kernels with a compiled backend and a pure-numpy fallback.

The compiled extension is used when it imports; set ``SURVBENCH_BACKEND=python``
to force the fallback. ``BACKEND`` names the active one.
"""

import importlib
import os

from . import _py

_compiled = None
if os.environ.get("SURVBENCH_BACKEND", "").lower() != "python":
    try:
        _compiled = importlib.import_module("._fast", __name__)
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _py
BACKEND = "cython" if _compiled is not None else "python"

grow_logrank_tree = _impl.grow_logrank_tree
apply_tree = _impl.apply_tree
best_ls_splits = _impl.best_ls_splits
concordance_counts = _impl.concordance_counts

__all__ = [
    "BACKEND",
    "grow_logrank_tree",
    "apply_tree",
    "best_ls_splits",
    "concordance_counts",
]
