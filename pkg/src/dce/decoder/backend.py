"""Kernel backend selection: compiled extension when available, NumPy otherwise.

The choice happens once at import. ``DCE_BACKEND`` overrides it:

* ``auto``   (default) -- compiled kernels if the extension imports;
* ``numpy``  -- force the pure-NumPy kernels;
* ``cython`` -- require the compiled kernels, fail loudly if missing.

Both backends expose the same functions; results agree to floating-point
reduction-order differences. The 1x1 convolution is BLAS-backed either way.
"""

from __future__ import annotations

import os

import numpy as np

from . import kernels_numpy as _np_kernels
from .plans import UpsamplePlan

try:
    from . import _kernels as _cy_kernels
except ImportError:
    _cy_kernels = None

_choice = os.environ.get("DCE_BACKEND", "auto").lower()
if _choice not in ("auto", "numpy", "cython"):
    raise ValueError(f"DCE_BACKEND must be auto|numpy|cython, got {_choice!r}")
if _choice == "cython" and _cy_kernels is None:
    raise ImportError("DCE_BACKEND=cython but the compiled extension is not built")

_use_cython = _cy_kernels is not None and _choice != "numpy"

conv_fwd = _np_kernels.conv_fwd
conv_bwd = _np_kernels.conv_bwd

if _use_cython:

    def upsample_fwd(x: np.ndarray, pf: UpsamplePlan, pt: UpsamplePlan) -> np.ndarray:
        return _cy_kernels.upsample2x_fwd(x, pf.i0, pf.i1, pf.w, pt.i0, pt.i1, pt.w)

    def upsample_bwd(gy: np.ndarray, pf: UpsamplePlan, pt: UpsamplePlan) -> np.ndarray:
        return _cy_kernels.upsample2x_bwd(
            gy, pf.n_in, pt.n_in, pf.i0, pf.i1, pf.w, pt.i0, pt.i1, pt.w
        )

    relu_fwd = _cy_kernels.relu_fwd
    relu_bwd = _cy_kernels.relu_bwd
    bn_fwd = _cy_kernels.bn_fwd
    bn_bwd = _cy_kernels.bn_bwd
else:
    upsample_fwd = _np_kernels.upsample_fwd
    upsample_bwd = _np_kernels.upsample_bwd
    relu_fwd = _np_kernels.relu_fwd
    relu_bwd = _np_kernels.relu_bwd
    bn_fwd = _np_kernels.bn_fwd
    bn_bwd = _np_kernels.bn_bwd


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return "cython" if _use_cython else "numpy"


def compiled_available() -> bool:
    return _cy_kernels is not None
