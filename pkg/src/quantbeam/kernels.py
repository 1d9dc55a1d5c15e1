"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``QUANTBEAM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QUANTBEAM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

quantize_midrise = _impl.quantize_midrise
array_gain = _impl.array_gain

__all__ = ["BACKEND", "quantize_midrise", "array_gain"]
