"""Shrinkage estimators for the sample cross-covariance operator.

Three estimators, all shrinking toward the zero operator:

* ``lw``     uniform scaling (1 - rho) with rho = b2/d2, the plug-in
             ratio of the operator's estimated variance to its estimated
             squared norm;
* ``scose``  uniform scaling with the leave-one-out closed-form intensity;
* ``fcose``  per-point reweighting beta = (M + lambda I)^-1 M 1 with
             M = K~ o L~ (Hadamard product), lambda picked by LOOCV.

Everything is computed from the centered gram pair; d2 equals the squared
HS norm of the plain operator and b2 its (clipped) variance estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import GramPair, KernelSpec, gram_pair, median_heuristic
from .operators import EmpiricalOperator, hs_inner, hs_norm_sq, plain_operator

DEFAULT_LAMBDA_GRID_SIZE = 30
# grid spans [1e-4, 1e2] times tr(M)/n, wide enough to cover both the
# no-shrinkage and zero-operator limits
LAMBDA_GRID_DECADES = (-4.0, 2.0)


@dataclass(frozen=True, eq=False)
class ShrinkageResult:
    """Outcome of fitting one shrinkage estimator.

    ``rho`` is set for lw/scose (in [0, 1] after clamping), ``beta`` and
    ``lam`` for fcose. ``clamped`` records that the raw intensity exceeded 1
    so the estimator collapsed to the zero operator.
    """

    kind: str
    rho: float | None
    beta: np.ndarray | None
    lam: float | None
    clamped: bool
    d2: float
    b2: float


def d2(g: GramPair) -> float:
    """Squared HS norm of the plain operator: (1/n^2) sum_ij K~_ij L~_ij."""
    return max(float(np.mean(g.k_centered * g.l_centered)), 0.0)


def _diag_mean(g: GramPair) -> float:
    return float(np.mean(np.diag(g.k_centered) * np.diag(g.l_centered)))


def b2(g: GramPair) -> float:
    """Variance estimate of the plain operator.

    (1/n) [ (1/n) sum_i K~_ii L~_ii - (1/n^2) sum_ij K~_ij L~_ij ],
    clipped at zero from below (negative values can only come from
    roundoff, since it estimates a variance).
    """
    return max((_diag_mean(g) - d2(g)) / g.n, 0.0)


def rho_lw(g: GramPair) -> ShrinkageResult:
    """Plug-in shrinkage intensity rho = b2/d2, clamped into [0, 1].

    d2 = 0 yields rho = 1 (the zero operator). ``clamped`` is set exactly
    when the raw ratio exceeds 1, i.e. b2 > d2.
    """
    d2v = d2(g)
    b2v = b2(g)
    if d2v <= 0.0:
        return ShrinkageResult("lw", 1.0, None, None, b2v > 0.0, d2v, b2v)
    raw = b2v / d2v
    return ShrinkageResult("lw", min(raw, 1.0), None, None, raw > 1.0, d2v, b2v)


def rho_scose(g: GramPair) -> ShrinkageResult:
    """Leave-one-out closed-form intensity, clamped into [0, 1].

    rho = (diag_mean - d2) / ((n - 2) d2 + diag_mean / n). A zero
    denominator means the operator itself is degenerate; the result is the
    zero operator with the clamped flag set. Whenever b2 > d2 this clamps
    together with the plug-in rule, so both produce the zero operator.
    """
    n = g.n
    d2v = d2(g)
    b2v = b2(g)
    dm = _diag_mean(g)
    den = (n - 2) * d2v + dm / n
    if den <= 0.0:
        return ShrinkageResult("scose", 1.0, None, None, True, d2v, b2v)
    raw = (dm - d2v) / den
    rho = min(max(raw, 0.0), 1.0)
    return ShrinkageResult("scose", rho, None, None, raw > 1.0, d2v, b2v)


def _hadamard(g: GramPair) -> np.ndarray:
    return g.k_centered * g.l_centered


def _eigh_psd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(m)
    return np.clip(vals, 0.0, None), vecs


def default_lambda_grid(g: GramPair, size: int = DEFAULT_LAMBDA_GRID_SIZE) -> np.ndarray:
    """Log-spaced lambda grid scaled by tr(M)/n, M = K~ o L~."""
    scale = float(np.trace(_hadamard(g))) / g.n
    if scale <= 0.0:
        # degenerate operator: any lambda gives beta = 0
        return np.ones(1)
    lo, hi = LAMBDA_GRID_DECADES
    return scale * np.logspace(lo, hi, size)


def fcose_beta(g: GramPair, lam: float) -> np.ndarray:
    """Per-point weights beta = (M + lambda I)^-1 M 1 for a fixed lambda."""
    if not lam > 0.0:
        raise ValueError("lambda must be positive")
    m = _hadamard(g)
    return np.linalg.solve(m + lam * np.eye(g.n), m @ np.ones(g.n))


def _loocv_curve_from_eig(
    m: np.ndarray, vals: np.ndarray, vecs: np.ndarray, lambda_grid: np.ndarray
) -> np.ndarray:
    """Leave-one-out error E(lambda) on a grid, O(n^2) per lambda.

    For each held-out i the reduced-system solution is available in closed
    form from the full-data quantities: with G = (M + lambda I)^-1,

        beta^(-i)_j = beta_j + G_ji (1 - beta_i) / G_ii   (j != i),

    so every per-point reconstruction error needs only diag(G), diag(G^2),
    M beta, G beta and beta' M beta, all cheap once M = Q diag(v) Q' is
    eigendecomposed.
    """
    n = m.shape[0]
    t = vecs.T @ np.ones(n)
    q2 = vecs**2
    m_diag = np.diag(m)
    errors = np.empty(lambda_grid.size)
    for idx, lam in enumerate(lambda_grid):
        den = vals + lam
        beta = vecs @ (vals / den * t)
        g_diag = q2 @ (1.0 / den)
        g2_diag = q2 @ (1.0 / den**2)
        m_beta = vecs @ (vals**2 / den * t)
        g_beta = vecs @ (vals / den**2 * t)
        beta_m_beta = float(np.sum(t**2 * vals**3 / den**2))
        c = (1.0 - beta) / g_diag
        s = m_beta - m_diag * beta + c * (1.0 - lam * g_diag - m_diag * g_diag)
        q = (
            beta_m_beta
            + 2.0 * c * (beta - lam * g_beta)
            + c**2 * (g_diag - lam * g2_diag)
            - 2.0 * (m_beta + c * (1.0 - lam * g_diag))
            + m_diag
        )
        errors[idx] = float(np.sum(m_diag - (2.0 / n) * s + q / n**2))
    return errors


def fcose_loocv_curve(g: GramPair, lambda_grid) -> np.ndarray:
    """Fast-path LOOCV errors for each lambda in the grid."""
    grid = _check_grid(lambda_grid)
    m = _hadamard(g)
    vals, vecs = _eigh_psd(m)
    return _loocv_curve_from_eig(m, vals, vecs, grid)


def fcose_loocv_bruteforce(g: GramPair, lam: float) -> float:
    """LOOCV error by n independent refits; the oracle for the fast path.

    Each refit drops point i, solves the (n-1)-sized system
    (M^(-i) + lambda I) beta = M^(-i) 1 and scores the held-out
    reconstruction ||z_i - sum_{j != i} (beta_j / n) z_j||^2 through the
    gram identity <z_i, z_j> = M_ij. O(n^4); intended for small n.
    """
    if not lam > 0.0:
        raise ValueError("lambda must be positive")
    m = _hadamard(g)
    n = g.n
    if n < 2:
        raise ValueError("LOOCV needs at least two points")
    total = 0.0
    for i in range(n):
        keep = np.delete(np.arange(n), i)
        m_sub = m[np.ix_(keep, keep)]
        beta = np.linalg.solve(m_sub + lam * np.eye(n - 1), m_sub @ np.ones(n - 1))
        cross = m[i, keep]
        total += (
            m[i, i] - (2.0 / n) * float(cross @ beta) + float(beta @ m_sub @ beta) / n**2
        )
    return total


def _check_grid(lambda_grid) -> np.ndarray:
    grid = np.asarray(lambda_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise ValueError("lambda grid must be nonempty")
    if np.any(grid <= 0.0):
        raise ValueError("lambda grid values must be positive")
    return grid


def fcose_fit(g: GramPair, lambda_grid=None) -> ShrinkageResult:
    """Fit the per-point reweighting estimator, selecting lambda by LOOCV.

    Ties in the LOOCV error are broken toward the larger lambda (more
    shrinkage).
    """
    grid = default_lambda_grid(g) if lambda_grid is None else _check_grid(lambda_grid)
    m = _hadamard(g)
    vals, vecs = _eigh_psd(m)
    errors = _loocv_curve_from_eig(m, vals, vecs, grid)
    best = int(np.max(np.flatnonzero(errors == errors.min())))
    lam = float(grid[best])
    den = vals + lam
    beta = vecs @ (vals / den * (vecs.T @ np.ones(g.n)))
    return ShrinkageResult("fcose", None, beta, lam, False, d2(g), b2(g))


def apply_shrinkage(
    result: ShrinkageResult,
    x,
    y,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
) -> EmpiricalOperator:
    """Turn a fit into an operator: weights (1-rho)/n, or beta_i/n for fcose."""
    op = plain_operator(x, y, x_kernel, y_kernel)
    if result.kind == "fcose":
        if result.beta is None or result.beta.size != op.n:
            raise ValueError("fcose result does not match the sample size")
        return EmpiricalOperator(op.x, op.y, x_kernel, y_kernel, result.beta / op.n)
    if result.rho is None:
        raise ValueError(f"result of kind {result.kind!r} carries no intensity")
    w = np.full(op.n, (1.0 - result.rho) / op.n)
    return EmpiricalOperator(op.x, op.y, x_kernel, y_kernel, w)


@dataclass(frozen=True)
class OracleCheckReport:
    """Monte Carlo estimates of the oracle shrinkage constants.

    alpha2 is the squared norm of the proxy ("true") operator, beta2 the
    mean squared estimation error, delta2 the mean squared norm of the
    sample operator. ``identity_gap`` reports alpha2 + beta2 - delta2;
    the identity holds in expectation up to an O(1/n) term (the sample
    operator's mean is (1 - 1/n) times the truth), so a well-configured
    check keeps 2 alpha2 / n below the Monte Carlo resolution.
    ``identity_se`` combines the repetition noise with a delta-method
    estimate of the proxy-sample contribution; both enter the gap.
    ``oracle_rho`` is beta2/delta2, the risk-optimal intensity that the
    plug-in rule estimates.
    """

    alpha2: float
    beta2: float
    delta2: float
    identity_gap: float
    identity_se: float
    oracle_rho: float
    mean_rho_lw: float
    se_rho_lw: float
    reps: int


def mc_oracle_check(
    dist,
    n: int,
    reps: int,
    proxy_n: int,
    seed: int = 0,
    kernel_resolver=None,
) -> OracleCheckReport:
    """Monte Carlo consistency check of the oracle decomposition.

    Draws one proxy sample of ``proxy_n`` points for the "true" operator,
    then ``reps`` samples of size n. ``kernel_resolver(px, py)`` maps the
    proxy sample to the two kernel specs; the default picks gaussian
    kernels with the median-heuristic bandwidth of each proxy side, so
    every repetition lives in the same RKHS.
    """
    from .synthdata import sample as synth_sample
    from .utils import rng_at

    if reps < 1:
        raise ValueError("reps must be at least 1")
    px, py = synth_sample(dist, proxy_n, rng=rng_at(seed, 0))
    if kernel_resolver is None:
        x_kernel = KernelSpec("gaussian", bandwidth=median_heuristic(px))
        y_kernel = KernelSpec("gaussian", bandwidth=median_heuristic(py))
    else:
        x_kernel, y_kernel = kernel_resolver(px, py)
    proxy_op = plain_operator(px, py, x_kernel, y_kernel)
    proxy_pair = gram_pair(px, py, x_kernel, y_kernel)
    m_proxy = proxy_pair.k_centered * proxy_pair.l_centered
    # alpha2 from the cross inner product of two independent proxy halves;
    # unlike ||proxy operator||^2 this is not inflated by the proxy's own
    # estimation variance
    half = proxy_n // 2
    if half >= 1 and proxy_n - half >= 1:
        op_a = plain_operator(px[:half], py[:half], x_kernel, y_kernel)
        op_b = plain_operator(px[half:], py[half:], x_kernel, y_kernel)
        alpha2 = max(hs_inner(op_a, op_b), 0.0)
    else:
        alpha2 = max(float(np.mean(m_proxy)), 0.0)
    # delta-method spread of the gap in the proxy draw: the gap gradient at
    # the truth is (2 + 2/n) Sigma, and <Sigma^, w_i> are the row means of
    # the proxy Hadamard matrix; near independence the degenerate
    # (second-order) part of the split inner product dominates, so it is
    # added from the doubly centered Hadamard entries
    if proxy_n > 1:
        proxy_terms = m_proxy.mean(axis=1)
        se_linear = (2.0 + 2.0 / n) * float(np.std(proxy_terms, ddof=1)) / np.sqrt(proxy_n)
        c = m_proxy - proxy_terms[:, None] - proxy_terms[None, :] + alpha2
        np.fill_diagonal(c, 0.0)
        mean_c2 = float(np.sum(c**2)) / (proxy_n * (proxy_n - 1))
        se_degenerate = 2.0 * np.sqrt(mean_c2 * 4.0 / proxy_n**2)
        se_proxy = float(np.hypot(se_linear, se_degenerate))
    else:
        se_proxy = 0.0

    delta2_samples = np.empty(reps)
    inner_samples = np.empty(reps)
    rho_samples = np.empty(reps)
    for r in range(reps):
        sx, sy = synth_sample(dist, n, rng=rng_at(seed, 1 + r))
        op = plain_operator(sx, sy, x_kernel, y_kernel)
        delta2_samples[r] = hs_norm_sq(op)
        inner_samples[r] = hs_inner(op, proxy_op)
        rho_samples[r] = rho_lw(gram_pair(sx, sy, x_kernel, y_kernel)).rho

    beta2_samples = delta2_samples - 2.0 * inner_samples + alpha2
    beta2_hat = float(np.mean(beta2_samples))
    delta2_hat = float(np.mean(delta2_samples))
    gap_samples = alpha2 + beta2_samples - delta2_samples
    gap = float(np.mean(gap_samples))
    se_rep = float(np.std(gap_samples, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    gap_se = float(np.hypot(se_rep, se_proxy))
    return OracleCheckReport(
        alpha2=alpha2,
        beta2=beta2_hat,
        delta2=delta2_hat,
        identity_gap=gap,
        identity_se=gap_se,
        oracle_rho=beta2_hat / delta2_hat if delta2_hat > 0 else 1.0,
        mean_rho_lw=float(np.mean(rho_samples)),
        se_rho_lw=float(np.std(rho_samples, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0,
        reps=reps,
    )
