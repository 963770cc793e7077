"""Precomputed index/weight plans for factor-2 bilinear upsampling.

The upsampler doubles an axis using the half-pixel convention: output index j
samples the input at coordinate (j + 0.5)/2 - 0.5, clamped to [0, n-1], as a
linear blend of the two straddling input samples. A plan captures that map
once per axis length, both as gather indices (used by the compiled kernels)
and as a dense interpolation matrix (used by the NumPy backend, where the
transposed matrix also gives the exact adjoint for the backward pass).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class UpsamplePlan:
    n_in: int
    i0: np.ndarray  # lower source index per output position
    i1: np.ndarray  # upper source index per output position
    w: np.ndarray  # blend weight on i1; (1 - w) goes on i0
    matrix: np.ndarray  # dense (2n, n) equivalent of the interpolation


@lru_cache(maxsize=None)
def upsample_plan(n_in: int) -> UpsamplePlan:
    if n_in < 1:
        raise ValueError("axis length must be >= 1")
    j = np.arange(2 * n_in, dtype=np.float64)
    src = np.clip((j + 0.5) / 2.0 - 0.5, 0.0, n_in - 1.0)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w = src - i0
    matrix = np.zeros((2 * n_in, n_in))
    rows = np.arange(2 * n_in)
    np.add.at(matrix, (rows, i0), 1.0 - w)
    np.add.at(matrix, (rows, i1), w)
    for arr in (i0, i1, w, matrix):
        arr.setflags(write=False)
    return UpsamplePlan(n_in=n_in, i0=i0, i1=i1, w=w, matrix=matrix)
