"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``GAUSSCORR_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("GAUSSCORR_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback
    else:
        BACKEND = "cython"
else:
    _impl = _fallback

hermite_table = _impl.hermite_table
hermite_moments = _impl.hermite_moments
hermite_series = _impl.hermite_series
lagrange_slack = _impl.lagrange_slack
