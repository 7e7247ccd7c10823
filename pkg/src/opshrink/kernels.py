"""Kernel evaluation, gram matrices, centering and bandwidth selection.

All gram-level routines operate on samples stored as ``(n, d)`` float
arrays (one point per row). Use :func:`as_sample` to coerce and validate
user input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

KERNEL_KINDS = ("linear", "polynomial", "gaussian", "laplace")


class DegenerateSampleError(ValueError):
    """Raised when a sample has no usable geometry (all points identical)."""


@dataclass(frozen=True)
class KernelSpec:
    """A reproducing kernel and its parameters.

    kind:
        ``linear``      k(x, y) = x.y
        ``polynomial``  k(x, y) = (x.y + offset) ** degree
        ``gaussian``    k(x, y) = exp(-||x - y||^2 / (2 sigma^2))
        ``laplace``     k(x, y) = exp(-||x - y||_1 / sigma)

    ``degree``/``offset`` apply to the polynomial kernel only, ``bandwidth``
    (sigma) to gaussian/laplace only. Every kind is symmetric in its
    arguments and produces positive semidefinite gram matrices.
    """

    kind: str
    degree: int = 2
    offset: float = 1.0
    bandwidth: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("polynomial degree must be a positive integer")
        if self.kind in ("gaussian", "laplace") and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def as_sample(points) -> np.ndarray:
    """Coerce ``points`` to an ``(n, d)`` float64 array and validate it.

    1-d input is treated as n scalar observations. Rejects empty or
    non-finite samples.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"sample must be a nonempty (n, d) array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("sample contains non-finite values")
    return pts


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of vectors."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    if spec.kind == "linear":
        return float(xv @ yv)
    if spec.kind == "polynomial":
        return float((xv @ yv + spec.offset) ** spec.degree)
    if spec.kind == "gaussian":
        d2 = float(np.sum((xv - yv) ** 2))
        return float(np.exp(-d2 / (2.0 * spec.bandwidth**2)))
    d1 = float(np.sum(np.abs(xv - yv)))
    return float(np.exp(-d1 / spec.bandwidth))


def gram_cross(spec: KernelSpec, a, b) -> np.ndarray:
    """Raw kernel matrix K[i, j] = k(a_i, b_j), shape (n_a, n_b)."""
    av = as_sample(a)
    bv = as_sample(b)
    if av.shape[1] != bv.shape[1]:
        raise ValueError(f"dimension mismatch: {av.shape[1]} vs {bv.shape[1]}")
    if spec.kind == "linear":
        return av @ bv.T
    if spec.kind == "polynomial":
        return (av @ bv.T + spec.offset) ** spec.degree
    if spec.kind == "gaussian":
        d2 = cdist(av, bv, metric="sqeuclidean")
        return np.exp(-d2 / (2.0 * spec.bandwidth**2))
    d1 = cdist(av, bv, metric="cityblock")
    return np.exp(-d1 / spec.bandwidth)


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric gram matrix of one sample, K[i, j] = k(x_i, x_j)."""
    k = gram_cross(spec, points, points)
    # exact symmetry regardless of BLAS blocking
    return (k + k.T) / 2.0


def _center_once(k: np.ndarray) -> np.ndarray:
    return k - k.mean(axis=1, keepdims=True) - k.mean(axis=0, keepdims=True) + k.mean()


def center(k: np.ndarray) -> np.ndarray:
    """Doubly center a symmetric gram matrix: HKH with H = I - (1/n)11'.

    Uses the four-term row/column-mean form (O(n^2)), applied twice so the
    residual row/column sums are at roundoff of the centered scale rather
    than the raw gram scale, and symmetrizes the result.
    """
    k = np.asarray(k, dtype=np.float64)
    out = _center_once(_center_once(k))
    return (out + out.T) / 2.0


def cross_centered_gram(spec: KernelSpec, a, b) -> np.ndarray:
    """Centered cross gram between two samples sharing one kernel.

    Entry (i, j) is the inner product of a_i's feature centered by sample
    a's mean with b_j's feature centered by sample b's mean:

        K_ij - mean_j K_ij - mean_i K_ij + mean_ij K_ij.
    """
    return _center_once(_center_once(gram_cross(spec, a, b)))


def median_heuristic(points) -> float:
    """Bandwidth from the median of pairwise Euclidean distances.

    Uses the lower median (index (m-1)//2 of the sorted m distances) so the
    result is always one of the observed distances. Requires at least two
    points and at least one nonzero distance.
    """
    pts = as_sample(points)
    if pts.shape[0] < 2:
        raise ValueError("median heuristic needs at least two points")
    d = np.sort(pdist(pts))
    sigma = float(d[(d.size - 1) // 2])
    if sigma <= 0.0:
        if d[-1] <= 0.0:
            raise DegenerateSampleError("all pairwise distances are zero")
        # lower median hit a zero tie; fall back to the smallest positive
        sigma = float(d[d > 0.0][0])
    return sigma


@dataclass(frozen=True)
class GramPair:
    """Centered gram matrices of a paired sample, one per side.

    ``k_centered`` and ``l_centered`` are n x n, symmetric, PSD and doubly
    centered; together they are the computational representation of the
    sample cross-covariance operator with uniform weights.
    """

    k_centered: np.ndarray
    l_centered: np.ndarray
    x_kernel: KernelSpec
    y_kernel: KernelSpec

    @property
    def n(self) -> int:
        return self.k_centered.shape[0]


def gram_pair(x, y, x_kernel: KernelSpec, y_kernel: KernelSpec) -> GramPair:
    """Build the centered gram pair for a paired sample."""
    xv = as_sample(x)
    yv = as_sample(y)
    if xv.shape[0] != yv.shape[0]:
        raise ValueError("x and y must have the same number of points")
    return GramPair(
        k_centered=center(gram(x_kernel, xv)),
        l_centered=center(gram(y_kernel, yv)),
        x_kernel=x_kernel,
        y_kernel=y_kernel,
    )
