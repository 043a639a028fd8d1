"""Backend selection for the O(n^2) kernels.

The compiled extension is used when it imports; setting ``SQGPATCH_PURE_PYTHON=1``
forces the numpy fallback.  ``BACKEND`` names the active one.
"""
import os

from . import _kernels_py

if os.environ.get("SQGPATCH_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

transport_remainder = _impl.transport_remainder
normal_remainder = _impl.normal_remainder
arc_chord_table = _impl.arc_chord_table
arc_chord_sup = _impl.arc_chord_sup
offcurve_sum = _impl.offcurve_sum

__all__ = [
    "BACKEND",
    "transport_remainder",
    "normal_remainder",
    "arc_chord_table",
    "arc_chord_sup",
    "offcurve_sum",
]
