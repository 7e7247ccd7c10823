"""Seeded Monte Carlo experiment runners behind the command-line interface.

Every runner is a pure function of (config, seed): repetitions draw their
randomness from counter-based substreams keyed by (seed, stage, sweep
index, repetition index), so outputs are reproducible at any worker count.
Rows are emitted per repetition; aggregates (means, rates, standard
errors) are appended with repetition index -1.

Kernel bandwidths given as "median" are resolved per drawn sample for the
test-style experiments (power, scatter, ratio bars), but once per sweep
value from the proxy sample for the proxy-comparison experiments (risk,
spectra, singular study, oracle check); comparing operators across
samples is only defined inside a single RKHS.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash
from .hsic import permutation_null
from .kernels import cross_centered_gram, gram_pair
from .operators import (
    RkhsFunction,
    align_sign,
    hs_norm_sq,
    plain_operator,
    rkhs_diff_norm_sq,
    singular_spectrum,
)
from .results import AGGREGATE, ResultTable, Row
from .shrinkage import (
    apply_shrinkage,
    default_lambda_grid,
    fcose_fit,
    mc_oracle_check,
    rho_lw,
    rho_scose,
)
from .synthdata import sample
from .utils import rng_at

# seed-path stage tags
_PROXY, _REP, _PERM = 0, 1, 2

ESTIMATORS = ("plain", "lw", "scose", "fcose")


def run(cfg: ExperimentConfig) -> ResultTable:
    """Dispatch to the runner for cfg.experiment."""
    runner = {
        "risk_curve": run_risk_curve,
        "power_curve": run_power_curve,
        "scatter": run_scatter,
        "ratio_bars": run_ratio_bars,
        "spectra": run_spectra,
        "singular_study": run_singular_study,
        "oracle_check": run_oracle_check,
    }[cfg.experiment]
    return runner(cfg)


def _table(cfg: ExperimentConfig, rows: list) -> ResultTable:
    return ResultTable(rows=rows, config_hash=config_hash(cfg), seed=cfg.seed, version=__version__)


def _map_tasks(fn, tasks, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return m, se


# ---------------------------------------------------------------------------
# quadratic risk against a proxy truth


def _risk_rep(args) -> list:
    cfg, i, sv, r, px, py, kx, ky, proxy_norm = args
    n = cfg.n_at(sv)
    sx, sy = sample(cfg.distribution_at(sv), n, rng=rng_at(cfg.seed, _REP, i, r))
    g = gram_pair(sx, sy, kx, ky)
    m = g.k_centered * g.l_centered
    # mean over the proxy points of the cross-operator inner products
    cross = cross_centered_gram(kx, sx, px) * cross_centered_gram(ky, sy, py)
    cvec = cross.mean(axis=1)

    weights = {
        "plain": np.full(n, 1.0 / n),
        "lw": np.full(n, (1.0 - rho_lw(g).rho) / n),
        "scose": np.full(n, (1.0 - rho_scose(g).rho) / n),
        "fcose": fcose_fit(g, default_lambda_grid(g, cfg.lambda_grid_size)).beta / n,
    }
    rows = []
    for name in ESTIMATORS:
        w = weights[name]
        risk = float(w @ m @ w) - 2.0 * float(w @ cvec) + proxy_norm
        rows.append(Row(cfg.experiment, name, sv, r, "risk", max(risk, 0.0)))
    return rows


def run_risk_curve(cfg: ExperimentConfig) -> ResultTable:
    """Quadratic risk of all four estimators against a large-sample proxy.

    The proxy ("true") operator is drawn once per sweep value and shared
    by all repetitions.
    """
    rows: list[Row] = []
    for i, sv in enumerate(cfg.effective_sweep_values()):
        dist = cfg.distribution_at(sv)
        px, py = sample(dist, cfg.proxy_n, rng=rng_at(cfg.seed, _PROXY, i))
        kx = cfg.kernel_x.resolve(px)
        ky = cfg.kernel_y.resolve(py)
        proxy_norm = hs_norm_sq(plain_operator(px, py, kx, ky))
        tasks = [
            (cfg, i, sv, r, px, py, kx, ky, proxy_norm) for r in range(cfg.repetitions)
        ]
        for chunk in _map_tasks(_risk_rep, tasks, cfg.workers):
            rows.extend(chunk)
        for name in ESTIMATORS:
            vals = np.array([r.value for r in rows if r.metric == "risk" and r.estimator == name and r.sweep == sv])
            m, se = _mean_se(vals)
            rows.append(Row(cfg.experiment, name, sv, AGGREGATE, "risk_mean", m))
            rows.append(Row(cfg.experiment, name, sv, AGGREGATE, "risk_se", se))
    return _table(cfg, rows)


# ---------------------------------------------------------------------------
# permutation-test power and conditional diagnostics


def _power_rep(args) -> list:
    cfg, i, sv, r = args
    n = cfg.n_at(sv)
    sx, sy = sample(cfg.distribution_at(sv), n, rng=rng_at(cfg.seed, _REP, i, r))
    kx = cfg.kernel_x.resolve(sx)
    ky = cfg.kernel_y.resolve(sy)
    g = gram_pair(sx, sy, kx, ky)
    grid = default_lambda_grid(g, cfg.lambda_grid_size)
    observed, nulls = permutation_null(
        g, cfg.kinds, cfg.permutations, cfg.seed, grid, seed_path=(_PERM, i, r)
    )
    rows = []
    for kind in cfg.kinds:
        threshold = float(np.quantile(nulls[kind], 1.0 - cfg.alpha, method="linear"))
        b = nulls[kind].size
        p = (1.0 + float(np.sum(nulls[kind] >= observed[kind]))) / (b + 1.0)
        rows.append(Row(cfg.experiment, kind, sv, r, "reject", float(observed[kind] > threshold)))
        rows.append(Row(cfg.experiment, kind, sv, r, "p_value", p))
    return rows


# fewer conditioning events than this marks the estimate unreliable
MIN_CONDITIONING_EVENTS = 5


def run_power_curve(cfg: ExperimentConfig) -> ResultTable:
    """Rejection rate per statistic kind over the sweep, plus the
    conditional improvement/degradation diagnostics against the plain
    statistic."""
    rows: list[Row] = []
    for i, sv in enumerate(cfg.effective_sweep_values()):
        tasks = [(cfg, i, sv, r) for r in range(cfg.repetitions)]
        per_rep = _map_tasks(_power_rep, tasks, cfg.workers)
        for chunk in per_rep:
            rows.extend(chunk)
        rejects = {
            kind: np.array(
                [row.value for chunk in per_rep for row in chunk if row.metric == "reject" and row.estimator == kind]
            )
            for kind in cfg.kinds
        }
        for kind in cfg.kinds:
            rows.append(Row(cfg.experiment, kind, sv, AGGREGATE, "power", float(np.mean(rejects[kind]))))
        if "hsic" in cfg.kinds:
            plain = rejects["hsic"].astype(bool)
            n_rej = int(np.sum(plain))
            n_fail = int(np.sum(~plain))
            rows.append(Row(cfg.experiment, "hsic", sv, AGGREGATE, "n_plain_reject", float(n_rej)))
            rows.append(Row(cfg.experiment, "hsic", sv, AGGREGATE, "n_plain_fail", float(n_fail)))
            for kind in cfg.kinds:
                if kind == "hsic":
                    continue
                shrunk = rejects[kind].astype(bool)
                given_rej = float(np.mean(shrunk[plain])) if n_rej else float("nan")
                given_fail = float(np.mean(shrunk[~plain])) if n_fail else float("nan")
                rows.append(Row(cfg.experiment, kind, sv, AGGREGATE, "p_reject_given_plain_reject", given_rej))
                rows.append(Row(cfg.experiment, kind, sv, AGGREGATE, "p_reject_given_plain_fail", given_fail))
                rows.append(
                    Row(
                        cfg.experiment,
                        kind,
                        sv,
                        AGGREGATE,
                        "cond_insufficient",
                        float(n_rej < MIN_CONDITIONING_EVENTS or n_fail < MIN_CONDITIONING_EVENTS),
                    )
                )
    return _table(cfg, rows)


# ---------------------------------------------------------------------------
# per-permutation scatter of plain vs shrunk statistics


def _scatter_rep(args) -> list:
    cfg, i, sv, r = args
    n = cfg.n_at(sv)
    sx, sy = sample(cfg.distribution_at(sv), n, rng=rng_at(cfg.seed, _REP, i, r))
    kx = cfg.kernel_x.resolve(sx)
    ky = cfg.kernel_y.resolve(sy)
    g = gram_pair(sx, sy, kx, ky)
    kinds = cfg.kinds if "hsic" in cfg.kinds else ("hsic",) + cfg.kinds
    grid = default_lambda_grid(g, cfg.lambda_grid_size)
    observed, nulls = permutation_null(
        g, kinds, cfg.permutations, cfg.seed, grid, seed_path=(_PERM, i, r)
    )
    rows = []
    for kind in cfg.kinds:
        for b in range(cfg.permutations):
            rows.append(Row(cfg.experiment, kind, float(r), b, "hsic_plain", float(nulls["hsic"][b])))
            rows.append(Row(cfg.experiment, kind, float(r), b, "hsic_shrunk", float(nulls[kind][b])))
        rows.append(Row(cfg.experiment, kind, float(r), AGGREGATE, "observed_plain", observed["hsic"]))
        rows.append(Row(cfg.experiment, kind, float(r), AGGREGATE, "observed_shrunk", observed[kind]))
    return rows


def run_scatter(cfg: ExperimentConfig) -> ResultTable:
    """Per-permutation (plain, shrunk) statistic pairs; the sweep column
    holds the dataset repetition index."""
    sv = cfg.effective_sweep_values()[0]
    tasks = [(cfg, 0, sv, r) for r in range(cfg.repetitions)]
    rows: list[Row] = []
    for chunk in _map_tasks(_scatter_rep, tasks, cfg.workers):
        rows.extend(chunk)
    return _table(cfg, rows)


# ---------------------------------------------------------------------------
# observed-to-null-quantile ratio bars


def _ratio_rep(args) -> list:
    cfg, i, sv, r = args
    n = cfg.n_at(sv)
    sx, sy = sample(cfg.distribution_at(sv), n, rng=rng_at(cfg.seed, _REP, i, r))
    kx = cfg.kernel_x.resolve(sx)
    ky = cfg.kernel_y.resolve(sy)
    g = gram_pair(sx, sy, kx, ky)
    grid = default_lambda_grid(g, cfg.lambda_grid_size)
    observed, nulls = permutation_null(
        g, cfg.kinds, cfg.permutations, cfg.seed, grid, seed_path=(_PERM, i, r)
    )
    rows = []
    for kind in cfg.kinds:
        q95 = float(np.quantile(nulls[kind], 0.95, method="linear"))
        rows.append(Row(cfg.experiment, kind, sv, r, "observed", observed[kind]))
        rows.append(Row(cfg.experiment, kind, sv, r, "null_q95", q95))
    return rows


def run_ratio_bars(cfg: ExperimentConfig) -> ResultTable:
    """Mean observed statistic over mean null 95th percentile, per kind."""
    rows: list[Row] = []
    for i, sv in enumerate(cfg.effective_sweep_values()):
        tasks = [(cfg, i, sv, r) for r in range(cfg.repetitions)]
        per_rep = _map_tasks(_ratio_rep, tasks, cfg.workers)
        for chunk in per_rep:
            rows.extend(chunk)
        for kind in cfg.kinds:
            obs = np.array([row.value for chunk in per_rep for row in chunk if row.estimator == kind and row.metric == "observed"])
            q95 = np.array([row.value for chunk in per_rep for row in chunk if row.estimator == kind and row.metric == "null_q95"])
            ratio = float(np.mean(obs) / np.mean(q95)) if np.mean(q95) > 0 else float("inf")
            rows.append(Row(cfg.experiment, kind, sv, AGGREGATE, "ratio", ratio))
    return _table(cfg, rows)


# ---------------------------------------------------------------------------
# spectra of plain and shrunk operators across sample sizes


def run_spectra(cfg: ExperimentConfig) -> ResultTable:
    """Sorted singular spectra of the plain and lw-shrunk operators for
    each configured n plus the proxy size. One draw per n; the kernel is
    fixed from the proxy sample so spectra are comparable across n. The
    shrunk spectrum is the plain one scaled by (1 - rho), which is exact.
    """
    dist = cfg.distribution
    px, py = sample(dist, cfg.proxy_n, rng=rng_at(cfg.seed, _PROXY, 0))
    kx = cfg.kernel_x.resolve(px)
    ky = cfg.kernel_y.resolve(py)
    rows: list[Row] = []
    sizes = tuple(cfg.n_values) + (cfg.proxy_n,)
    for i, n in enumerate(sizes):
        if n == cfg.proxy_n:
            sx, sy = px, py
        else:
            sx, sy = sample(dist, n, rng=rng_at(cfg.seed, _REP, i, 0))
        g = gram_pair(sx, sy, kx, ky)
        op = plain_operator(sx, sy, kx, ky)
        spect = singular_spectrum(op, min(cfg.top_k, n))
        rho = rho_lw(g).rho
        for j, s in enumerate(spect.singular_values):
            rows.append(Row(cfg.experiment, "plain", float(n), j, "singular_value", float(s)))
            rows.append(Row(cfg.experiment, "lw", float(n), j, "singular_value", float((1.0 - rho) * s)))
        rows.append(Row(cfg.experiment, "lw", float(n), AGGREGATE, "rho_lw", rho))
    return _table(cfg, rows)


# ---------------------------------------------------------------------------
# accuracy of leading singular functions


def _singular_rep(args) -> list:
    cfg, r, px, py, kx, ky, ref_f_coeffs, ref_g_coeffs = args
    n = cfg.n_values[0]
    ref_f = RkhsFunction(px, ref_f_coeffs)
    ref_g = RkhsFunction(py, ref_g_coeffs)
    sx, sy = sample(cfg.distribution, n, rng=rng_at(cfg.seed, _REP, 0, r))
    g = gram_pair(sx, sy, kx, ky)
    ops = {
        "plain": plain_operator(sx, sy, kx, ky),
        "fcose": apply_shrinkage(
            fcose_fit(g, default_lambda_grid(g, cfg.lambda_grid_size)), sx, sy, kx, ky
        ),
    }
    rows = []
    for name, op in ops.items():
        spect = singular_spectrum(op, 1)
        if spect.rank < 1:
            rows.append(Row(cfg.experiment, name, float(n), r, "skipped", 1.0))
            continue
        f = align_sign(RkhsFunction(op.x, spect.left_coeffs[0]), ref_f, kx)
        gg = align_sign(RkhsFunction(op.y, spect.right_coeffs[0]), ref_g, ky)
        rows.append(Row(cfg.experiment, name, float(n), r, "mse_f", rkhs_diff_norm_sq(f, ref_f, kx)))
        rows.append(Row(cfg.experiment, name, float(n), r, "mse_g", rkhs_diff_norm_sq(gg, ref_g, ky)))
    return rows


def run_singular_study(cfg: ExperimentConfig) -> ResultTable:
    """Mean squared RKHS error of the leading singular functions of the
    plain and fcose estimators against a large-sample reference.

    Signs are aligned to the reference before the error is computed.
    Repetitions whose estimate has rank zero are skipped and counted.
    """
    dist = cfg.distribution
    px, py = sample(dist, cfg.proxy_n, rng=rng_at(cfg.seed, _PROXY, 0))
    kx = cfg.kernel_x.resolve(px)
    ky = cfg.kernel_y.resolve(py)
    ref_spect = singular_spectrum(plain_operator(px, py, kx, ky), 1)
    if ref_spect.rank < 1:
        raise RuntimeError("reference operator has rank zero; increase proxy_n")
    tasks = [
        (cfg, r, px, py, kx, ky, ref_spect.left_coeffs[0], ref_spect.right_coeffs[0])
        for r in range(cfg.repetitions)
    ]
    rows: list[Row] = []
    per_rep = _map_tasks(_singular_rep, tasks, cfg.workers)
    for chunk in per_rep:
        rows.extend(chunk)
    n = float(cfg.n_values[0])
    for name in ("plain", "fcose"):
        for metric in ("mse_f", "mse_g"):
            vals = np.array([row.value for row in rows if row.estimator == name and row.metric == metric])
            if vals.size:
                m, se = _mean_se(vals)
                rows.append(Row(cfg.experiment, name, n, AGGREGATE, metric + "_mean", m))
                rows.append(Row(cfg.experiment, name, n, AGGREGATE, metric + "_se", se))
        skipped = sum(1 for row in rows if row.estimator == name and row.metric == "skipped")
        rows.append(Row(cfg.experiment, name, n, AGGREGATE, "n_skipped", float(skipped)))
    return _table(cfg, rows)


# ---------------------------------------------------------------------------
# oracle-constant consistency check


def run_oracle_check(cfg: ExperimentConfig) -> ResultTable:
    """Monte Carlo estimates of the oracle shrinkage constants and the
    decomposition identity gap."""
    report = mc_oracle_check(
        cfg.distribution,
        cfg.n_values[0],
        cfg.repetitions,
        cfg.proxy_n,
        seed=cfg.seed,
        kernel_resolver=lambda px, py: (cfg.kernel_x.resolve(px), cfg.kernel_y.resolve(py)),
    )
    n = float(cfg.n_values[0])
    rows = [
        Row(cfg.experiment, "plain", n, AGGREGATE, metric, getattr(report, metric))
        for metric in (
            "alpha2",
            "beta2",
            "delta2",
            "identity_gap",
            "identity_se",
            "oracle_rho",
            "mean_rho_lw",
            "se_rho_lw",
        )
    ]
    return _table(cfg, rows)
