"""Kernel dispatch: compiled extension when importable, NumPy otherwise.

Set ``PREDSAFE_PURE_PYTHON=1`` before import to force the NumPy versions.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

BACKEND = "python"
clip_area = _kernels_py.clip_area
segment_products = _kernels_py.segment_products

if os.environ.get("PREDSAFE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable; using NumPy fallback")
    else:
        BACKEND = "compiled"
        clip_area = _compiled.clip_area
        segment_products = _compiled.segment_products

__all__ = ["BACKEND", "clip_area", "segment_products"]
