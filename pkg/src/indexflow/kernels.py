"""Hot kernels: compiled extension when available, numpy fallback otherwise.

Set ``INDEXFLOW_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("INDEXFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

bspline_ders = _impl.bspline_ders
assemble_form = _impl.assemble_form
find_spans = _pykernels.find_spans

__all__ = ["BACKEND", "bspline_ders", "assemble_form", "find_spans"]
