"""Empirical cross-covariance operators as weighted rank-one sums.

An operator here is S = sum_i w_i (phi~_i (x) psi~_i), where phi~_i and
psi~_i are the kernel features of the paired sample centered by their own
sample means. All Hilbert-Schmidt quantities reduce to centered gram
matrices: <phi~_i (x) psi~_i, phi~_j (x) psi~_j> = K~_ij * L~_ij, so inner
products, norms, distances and spectra never need explicit feature maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, as_sample, center, cross_centered_gram, gram, gram_cross

# relative cutoff for treating eigen/singular values as zero
EIG_TRUNCATION = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalOperator:
    """Weighted sum of centered rank-one tensors over a paired sample.

    The plain sample operator has weights 1/n; shrunk variants only change
    the weights ((1-rho)/n uniformly, or beta_i/n per point).
    """

    x: np.ndarray
    y: np.ndarray
    x_kernel: KernelSpec
    y_kernel: KernelSpec
    weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", as_sample(self.x))
        object.__setattr__(self, "y", as_sample(self.y))
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        object.__setattr__(self, "weights", w)
        if not (self.x.shape[0] == self.y.shape[0] == w.size):
            raise ValueError("x, y and weights must agree in length")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")

    @property
    def n(self) -> int:
        return self.weights.size


def plain_operator(x, y, x_kernel: KernelSpec, y_kernel: KernelSpec) -> EmpiricalOperator:
    """The sample cross-covariance operator (uniform weights 1/n)."""
    xv = as_sample(x)
    return EmpiricalOperator(xv, y, x_kernel, y_kernel, np.full(xv.shape[0], 1.0 / xv.shape[0]))


def reweighted(op: EmpiricalOperator, weights) -> EmpiricalOperator:
    """Same sample and kernels, different weights."""
    return EmpiricalOperator(op.x, op.y, op.x_kernel, op.y_kernel, weights)


def _check_compatible(a: EmpiricalOperator, b: EmpiricalOperator) -> None:
    if a.x_kernel != b.x_kernel or a.y_kernel != b.y_kernel:
        raise ValueError("operators must share kernel specs on both sides")


def cross_hadamard(a: EmpiricalOperator, b: EmpiricalOperator) -> np.ndarray:
    """Elementwise product of the two cross-centered grams between a and b.

    hs_inner(a, b) = w_a' P w_b with P this matrix; exposing it lets callers
    evaluate many weightings of the same samples without recomputing grams.
    """
    _check_compatible(a, b)
    kx = cross_centered_gram(a.x_kernel, a.x, b.x)
    ky = cross_centered_gram(a.y_kernel, a.y, b.y)
    return kx * ky


def hs_inner(a: EmpiricalOperator, b: EmpiricalOperator) -> float:
    """Hilbert-Schmidt inner product <S_a, S_b>."""
    return float(a.weights @ cross_hadamard(a, b) @ b.weights)


def hs_norm_sq(a: EmpiricalOperator) -> float:
    """Squared Hilbert-Schmidt norm ||S_a||^2 (nonnegative)."""
    return max(hs_inner(a, a), 0.0)


def hs_distance_sq(a: EmpiricalOperator, b: EmpiricalOperator) -> float:
    """Squared HS distance ||S_a - S_b||^2, with tiny negative roundoff clipped."""
    na = hs_norm_sq(a)
    nb = hs_norm_sq(b)
    v = na - 2.0 * hs_inner(a, b) + nb
    if v < 0.0 and v >= -1e-10 * max(1.0, na, nb):
        return 0.0
    return v


def _psd_sqrt_pair(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root and pseudo-inverse square root of a PSD matrix.

    Eigenvalues below EIG_TRUNCATION times the largest are truncated to
    zero, which handles the rank deficiency of centered grams.
    """
    vals, vecs = np.linalg.eigh(s)
    lam_max = vals[-1] if vals.size else 0.0
    cut = EIG_TRUNCATION * lam_max if lam_max > 0 else np.inf
    vals = np.where(vals > cut, vals, 0.0)
    root_d = np.sqrt(vals)
    inv_d = np.divide(1.0, root_d, out=np.zeros_like(root_d), where=root_d > 0)
    root = (vecs * root_d) @ vecs.T
    inv = (vecs * inv_d) @ vecs.T
    return root, inv


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Leading singular values and singular-function coefficients.

    Row i of ``left_coeffs`` gives a_i with f_i = sum_j a_ij phi~_j, and
    a_i' K~ a_i = 1, so the singular functions are unit RKHS vectors.
    Components with (numerically) zero singular value are dropped.
    """

    singular_values: np.ndarray
    left_coeffs: np.ndarray
    right_coeffs: np.ndarray

    @property
    def rank(self) -> int:
        return self.singular_values.size


def singular_spectrum(op: EmpiricalOperator, top_k: int) -> SpectralDecomposition:
    """Top singular values and singular functions of the operator.

    Works through symmetric square roots of the centered grams: with
    Rx = K~^(1/2), Ry = L~^(1/2), the matrix C = Rx diag(w) Ry has the
    operator's singular values, and coefficient vectors are recovered by
    multiplying C's singular vectors with the pseudo-inverse roots. In the
    covariance case (x side == y side, uniform weights) the singular values
    are the eigenvalues of (1/n) K~.
    """
    if top_k < 0 or top_k > op.n:
        raise ValueError(f"top_k must be in [0, n]; got {top_k} for n={op.n}")
    kx = center(gram(op.x_kernel, op.x))
    ky = center(gram(op.y_kernel, op.y))
    rx, rx_inv = _psd_sqrt_pair(kx)
    ry, ry_inv = _psd_sqrt_pair(ky)
    c = (rx * op.weights) @ ry
    p, sing, qt = np.linalg.svd(c)
    s_max = sing[0] if sing.size else 0.0
    rank = int(np.sum(sing > EIG_TRUNCATION * s_max)) if s_max > 0 else 0
    k = min(top_k, rank)
    left = (rx_inv @ p[:, :k]).T
    right = (ry_inv @ qt[:k].T).T
    return SpectralDecomposition(sing[:k].copy(), left, right)


@dataclass(frozen=True, eq=False)
class RkhsFunction:
    """A function sum_j coeffs_j phi~_j in the RKHS spanned by one sample."""

    points: np.ndarray
    coeffs: np.ndarray


def eval_function(op: EmpiricalOperator, coeffs, side: str, query_points) -> np.ndarray:
    """Evaluate a coefficient-vector function against centered query features.

    Returns f(t) = sum_j c_j <phi~_j, phi(t) - mu^>, i.e. the plain kernel
    column centered in both the sample index and the sample mean at t.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    sample = op.x if side == "left" else op.y
    spec = op.x_kernel if side == "left" else op.y_kernel
    c = np.asarray(coeffs, dtype=np.float64).ravel()
    if c.size != op.n:
        raise ValueError("coefficient vector length must equal the sample size")
    kq = gram_cross(spec, sample, query_points)
    k = gram(spec, sample)
    centered = kq - kq.mean(axis=0, keepdims=True) - k.mean(axis=1, keepdims=True) + k.mean()
    return c @ centered


def rkhs_inner(f: RkhsFunction, g: RkhsFunction, spec: KernelSpec) -> float:
    """RKHS inner product of two centered-span functions (possibly from
    different samples): a' K~_AB b."""
    kab = cross_centered_gram(spec, f.points, g.points)
    return float(f.coeffs @ kab @ g.coeffs)


def rkhs_diff_norm_sq(f: RkhsFunction, g: RkhsFunction, spec: KernelSpec) -> float:
    """Squared RKHS distance ||f - g||^2 between centered-span functions."""
    faa = rkhs_inner(f, f, spec)
    gbb = rkhs_inner(g, g, spec)
    v = faa - 2.0 * rkhs_inner(f, g, spec) + gbb
    if v < 0.0 and v >= -1e-10 * max(1.0, faa, gbb):
        return 0.0
    return v


def align_sign(f: RkhsFunction, ref: RkhsFunction, spec: KernelSpec) -> RkhsFunction:
    """Flip f's sign if its RKHS inner product with ref is negative.

    Singular functions are only defined up to sign; align before comparing.
    A zero inner product keeps f unchanged.
    """
    if rkhs_inner(f, ref, spec) < 0.0:
        return RkhsFunction(f.points, -f.coeffs)
    return f
