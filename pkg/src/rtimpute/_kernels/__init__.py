"""Hot-kernel backend selection.

The compiled Cython core is preferred; the numpy implementation in
``pure.py`` is the drop-in fallback when the extension is unavailable.
Set ``RTIMPUTE_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the cross-backend tests).
"""

import os

if os.environ.get("RTIMPUTE_PURE_PYTHON"):
    from . import pure as backend
else:
    try:
        from . import _core as backend  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as backend

BACKEND = backend.NAME
cox_quantities = backend.cox_quantities
breslow_baseline = backend.breslow_baseline
concordance_counts = backend.concordance_counts

__all__ = ["BACKEND", "cox_quantities", "breslow_baseline", "concordance_counts"]
