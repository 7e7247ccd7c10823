"""HSIC statistics, shrunk variants, and permutation independence tests.

The plain statistic is the squared HS norm of the sample cross-covariance
operator, (1/n^2) tr(K~ L~). The shrunk variants rescale or reweight the
operator before taking the norm; crucially they are not monotone functions
of the plain statistic, which is why they can change permutation-test
power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import GramPair, KernelSpec, as_sample, gram_pair
from .shrinkage import (
    _eigh_psd,
    _hadamard,
    _loocv_curve_from_eig,
    _check_grid,
    d2,
    default_lambda_grid,
    rho_lw,
    rho_scose,
)
from .utils import rng_at

STATISTIC_KINDS = ("hsic", "hsic_lw", "hsic_scose", "hsic_fcose")


def hsic_n(g: GramPair) -> float:
    """Plain HSIC statistic (1/n^2) sum_ij K~_ij L~_ij."""
    return d2(g)


def hsic_lw(g: GramPair) -> float:
    """Plug-in-shrunk statistic ((1 - rho)_+)^2 HSIC."""
    r = rho_lw(g)
    return (1.0 - r.rho) ** 2 * r.d2


def hsic_scose(g: GramPair) -> float:
    """Closed-form-LOOCV-shrunk statistic ((1 - rho)_+)^2 HSIC."""
    r = rho_scose(g)
    return (1.0 - r.rho) ** 2 * r.d2


def hsic_fcose(
    g: GramPair,
    lam: float | None = None,
    lambda_grid=None,
    result=None,
    trace_form: bool = False,
) -> float:
    """Reweighted statistic ||S^fcose||^2 = (1/n^2) beta' M beta.

    ``lam`` may be given directly, taken from a fitted ``result``, or left
    unset so lambda is selected by LOOCV on ``lambda_grid`` (or the
    default grid). ``trace_form=True`` instead returns
    (1/n^2) tr(M G M G M) with G = (M + lambda I)^-1, an alternative
    closed form that is NOT the squared norm of the reweighted operator
    (the two differ; kept only for comparison).
    """
    if result is not None:
        if result.lam is None:
            raise ValueError("result carries no lambda; fit with fcose_fit")
        lam = result.lam
    m = _hadamard(g)
    vals, vecs = _eigh_psd(m)
    if lam is None:
        grid = default_lambda_grid(g) if lambda_grid is None else _check_grid(lambda_grid)
        errors = _loocv_curve_from_eig(m, vals, vecs, grid)
        lam = float(grid[int(np.max(np.flatnonzero(errors == errors.min())))])
    elif not lam > 0.0:
        raise ValueError("lambda must be positive")
    den = vals + lam
    n = g.n
    if trace_form:
        return float(np.sum(vals**3 / den**2)) / n**2
    t = vecs.T @ np.ones(n)
    # beta' M beta with beta = G M 1, using the shared eigenbasis
    return float(np.sum(t**2 * vals**3 / den**2)) / n**2


@dataclass(frozen=True, eq=False)
class TestOutcome:
    """Result of one permutation test."""

    statistic_kind: str
    observed: float
    null_samples: np.ndarray
    p_value: float
    threshold: float
    alpha: float
    rejected: bool
    insufficient_permutations: bool


@dataclass(frozen=True, eq=False)
class ScatterRecord:
    """Per-permutation (plain, shrunk) statistic pairs plus the observed pair."""

    statistic_kind: str
    null_plain: np.ndarray
    null_shrunk: np.ndarray
    observed_plain: float
    observed_shrunk: float


def _permuted_pair(g: GramPair, perm: np.ndarray) -> GramPair:
    # permuting L~'s rows and columns equals recentering the permuted raw L,
    # because the centering projector commutes with permutation conjugation
    lp = g.l_centered[np.ix_(perm, perm)]
    return GramPair(g.k_centered, lp, g.x_kernel, g.y_kernel)


def _statistics(g: GramPair, kinds, lambda_grid) -> dict[str, float]:
    out: dict[str, float] = {}
    for kind in kinds:
        if kind == "hsic":
            out[kind] = hsic_n(g)
        elif kind == "hsic_lw":
            out[kind] = hsic_lw(g)
        elif kind == "hsic_scose":
            out[kind] = hsic_scose(g)
        elif kind == "hsic_fcose":
            out[kind] = hsic_fcose(g, lambda_grid=lambda_grid)
        else:
            raise ValueError(f"unknown statistic kind {kind!r}")
    return out


def permutation_null(
    g: GramPair,
    kinds,
    b: int,
    seed: int,
    lambda_grid=None,
    seed_path: tuple[int, ...] = (),
) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Observed statistics and permutation null samples for several kinds.

    The y side is permuted; the x gram is reused across permutations.
    Permutation i is drawn from substream (seed, *seed_path, i), so the
    null sample is reproducible and independent of evaluation order. The
    fcose lambda grid is fixed once (from the observed pair unless given)
    and the LOOCV selection is re-run inside every permutation.
    """
    if b < 1:
        raise ValueError("number of permutations must be >= 1")
    kinds = tuple(kinds)
    if "hsic_fcose" in kinds and lambda_grid is None:
        lambda_grid = default_lambda_grid(g)
    observed = _statistics(g, kinds, lambda_grid)
    nulls = {kind: np.empty(b) for kind in kinds}
    n = g.n
    for i in range(b):
        perm = rng_at(seed, *seed_path, i).permutation(n)
        stats = _statistics(_permuted_pair(g, perm), kinds, lambda_grid)
        for kind in kinds:
            nulls[kind][i] = stats[kind]
    return observed, nulls


def _outcome(kind, observed, null, alpha) -> TestOutcome:
    b = null.size
    p = (1.0 + float(np.sum(null >= observed))) / (b + 1.0)
    threshold = float(np.quantile(null, 1.0 - alpha, method="linear"))
    return TestOutcome(
        statistic_kind=kind,
        observed=observed,
        null_samples=null,
        p_value=p,
        threshold=threshold,
        alpha=alpha,
        rejected=observed > threshold,
        insufficient_permutations=b < 1.0 / alpha - 1.0,
    )


def permutation_test_all(
    x,
    y,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
    kinds=STATISTIC_KINDS,
    b: int = 200,
    alpha: float = 0.05,
    seed: int = 0,
    lambda_grid=None,
) -> dict[str, TestOutcome]:
    """Run the permutation test for several statistics on one shared
    permutation stream (each kind sees exactly the permutations it would
    see alone with the same seed)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    xv = as_sample(x)
    yv = as_sample(y)
    if xv.shape[0] != yv.shape[0]:
        raise ValueError("x and y must be paired samples of equal size")
    g = gram_pair(xv, yv, x_kernel, y_kernel)
    observed, nulls = permutation_null(g, kinds, b, seed, lambda_grid)
    return {k: _outcome(k, observed[k], nulls[k], alpha) for k in kinds}


def permutation_test(
    x,
    y,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
    kind: str = "hsic",
    b: int = 200,
    alpha: float = 0.05,
    seed: int = 0,
    lambda_grid=None,
) -> TestOutcome:
    """Permutation independence test for a single statistic kind.

    The p-value uses the add-one formula (1 + #{null >= observed})/(B + 1);
    the rejection threshold is the linear-interpolation (1 - alpha)
    empirical quantile of the null sample, and ``rejected`` is defined by
    the threshold. ``insufficient_permutations`` flags B < 1/alpha - 1.
    """
    return permutation_test_all(
        x, y, x_kernel, y_kernel, (kind,), b, alpha, seed, lambda_grid
    )[kind]


def shrinkage_scatter(
    x,
    y,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
    kind: str,
    b: int = 200,
    seed: int = 0,
    lambda_grid=None,
) -> ScatterRecord:
    """Per-permutation (plain, shrunk) pairs for one statistic kind.

    For ``kind='hsic'`` the pairs sit on the diagonal; for lw/scose the
    shrunk value never exceeds the plain one.
    """
    g = gram_pair(x, y, x_kernel, y_kernel)
    kinds = ("hsic",) if kind == "hsic" else ("hsic", kind)
    observed, nulls = permutation_null(g, kinds, b, seed, lambda_grid)
    shrunk = kind if kind != "hsic" else "hsic"
    return ScatterRecord(
        statistic_kind=kind,
        null_plain=nulls["hsic"],
        null_shrunk=nulls[shrunk],
        observed_plain=observed["hsic"],
        observed_shrunk=observed[shrunk],
    )


def h0_h1_ratio(
    x,
    y,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
    b: int = 200,
    seed: int = 0,
    reps: int = 1,
    kinds=STATISTIC_KINDS,
    lambda_grid=None,
) -> dict[str, float]:
    """Observed statistic over the mean null 95th percentile, per kind.

    ``reps`` independent permutation batches are averaged in the
    denominator. Ratios well above 1 mean the observed statistic separates
    from its permutation null.
    """
    g = gram_pair(x, y, x_kernel, y_kernel)
    kinds = tuple(kinds)
    pct = {k: 0.0 for k in kinds}
    observed = None
    for r in range(reps):
        obs, nulls = permutation_null(g, kinds, b, seed, lambda_grid, seed_path=(r,))
        observed = obs
        for k in kinds:
            pct[k] += float(np.quantile(nulls[k], 0.95, method="linear"))
    return {k: observed[k] / (pct[k] / reps) if pct[k] > 0 else np.inf for k in kinds}
