"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``PHN_PURE_PYTHON=1`` to force the numpy kernels.
"""
import os

from phn import _pykernels

if os.environ.get("PHN_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
else:
    try:
        from phn import _ckernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND = "cython" if kernels is not _pykernels else "python"
