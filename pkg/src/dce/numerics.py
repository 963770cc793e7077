"""Dense array conventions, Hermitian linear algebra, and seeded random streams.

Array conventions used throughout the package:

* real tensors are C-contiguous ``float64`` arrays of shape (channels, freq, time);
* complex grids are ``complex128`` arrays of shape (antennas, subcarriers, symbols);
* complex matrices are 2-D ``complex128`` arrays.

All stochastic operations consume an explicit :class:`RngStream`; calling the
same operation twice with an equal stream yields bit-identical output. Streams
are counter-based (Philox), so per-trial substreams are reproducible no matter
how trials are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

_MASK64 = (1 << 64) - 1

HERMITIAN_RTOL = 1e-10


class NotPositiveDefinite(Exception):
    """Cholesky factorization hit a non-positive pivot."""


class NoConvergence(Exception):
    """Eigenvalue iteration failed to converge."""


def _splitmix64(x: int) -> int:
    """Finalizer of the splitmix64 generator; bijective 64-bit mixing."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Value identifying one reproducible random stream: (seed, stream id)."""

    seed: int
    stream: int = 0

    def child(self, index: int) -> "RngStream":
        """Derive a decorrelated substream; deterministic in (stream, index)."""
        mixed = _splitmix64((self.stream ^ _splitmix64(index & _MASK64)) & _MASK64)
        return RngStream(self.seed, mixed)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def draw_complex_gaussian(rng: RngStream, n: int, variance: float) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussians, total variance `variance`."""
    if variance < 0:
        raise ValueError("variance must be non-negative")
    gen = rng.generator()
    parts = gen.standard_normal((2, n))
    scale = np.sqrt(variance / 2.0)
    return scale * (parts[0] + 1j * parts[1])


def draw_uniform(rng: RngStream, n: int, low: float, high: float) -> np.ndarray:
    """i.i.d. uniforms on [low, high)."""
    if not low < high:
        raise ValueError("require low < high")
    gen = rng.generator()
    return low + (high - low) * gen.random(n)


def draw_qpsk(rng: RngStream, n: int) -> np.ndarray:
    """Unit-modulus symbols drawn uniformly from {(+-1 +- 1j)/sqrt(2)}."""
    gen = rng.generator()
    bits = gen.integers(0, 2, size=(2, n))
    return ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2.0)


def check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    """Raise if `a` deviates from its conjugate transpose beyond tolerance."""
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    scale = np.max(np.abs(a))
    if scale == 0:
        return
    dev = np.max(np.abs(a - a.conj().T))
    if dev > rtol * scale:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B for Hermitian positive-definite A via Cholesky.

    Raises NotPositiveDefinite when a Cholesky pivot is non-positive.
    """
    check_hermitian(a)
    try:
        chol = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return scipy.linalg.cho_solve(chol, b, check_finite=False)


def hermitian_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with real eigenvalues sorted in
    descending order and eigenvector columns matching that order, so that
    A = U diag(w) U^H.
    """
    check_hermitian(a)
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(w)[::-1]
    return w[order], u[:, order]
