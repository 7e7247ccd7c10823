"""Optional SVG plots rendered from result tables.

Plots only visualize values already present in the CSV (raw rows or the
repetition -1 aggregates); they never compute statistics themselves.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .results import AGGREGATE, ResultTable

_COLORS = {
    "plain": "tab:blue",
    "lw": "tab:orange",
    "scose": "tab:green",
    "fcose": "tab:purple",
    "hsic": "tab:blue",
    "hsic_lw": "tab:orange",
    "hsic_scose": "tab:green",
    "hsic_fcose": "tab:purple",
}


def _agg(table: ResultTable, metric: str):
    return [r for r in table.rows if r.metric == metric and r.repetition == AGGREGATE]


def _estimators(rows):
    return sorted({r.estimator for r in rows})


def plot_table(table: ResultTable, experiment: str, path) -> None:
    """Render the standard figure for an experiment kind to an SVG file."""
    fig = {
        "risk_curve": _plot_risk,
        "power_curve": _plot_power,
        "scatter": _plot_scatter,
        "ratio_bars": _plot_ratio,
        "spectra": _plot_spectra,
        "singular_study": _plot_singular,
        "oracle_check": _plot_oracle,
    }[experiment](table)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_risk(table: ResultTable):
    fig, ax = plt.subplots(figsize=(5, 4))
    means = _agg(table, "risk_mean")
    ses = {(r.estimator, r.sweep): r.value for r in _agg(table, "risk_se")}
    for est in _estimators(means):
        pts = sorted((r.sweep, r.value) for r in means if r.estimator == est)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        err = [ses.get((est, x), 0.0) for x in xs]
        ax.errorbar(xs, ys, yerr=err, marker="o", label=est, color=_COLORS.get(est))
    ax.set_xlabel("n")
    ax.set_ylabel("quadratic risk")
    ax.legend()
    fig.tight_layout()
    return fig


def _plot_power(table: ResultTable):
    fig, ax = plt.subplots(figsize=(5, 4))
    rows = _agg(table, "power")
    for est in _estimators(rows):
        pts = sorted((r.sweep, r.value) for r in rows if r.estimator == est)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=est, color=_COLORS.get(est))
    ax.set_xlabel("sweep value")
    ax.set_ylabel("power")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    return fig


def _plot_scatter(table: ResultTable):
    kinds = _estimators(table.rows)
    fig, axes = plt.subplots(1, len(kinds), figsize=(4 * len(kinds), 4), squeeze=False)
    for ax, kind in zip(axes[0], kinds):
        null_plain = [r.value for r in table.rows if r.estimator == kind and r.metric == "hsic_plain"]
        null_shrunk = [r.value for r in table.rows if r.estimator == kind and r.metric == "hsic_shrunk"]
        obs_p = [r.value for r in table.rows if r.estimator == kind and r.metric == "observed_plain"]
        obs_s = [r.value for r in table.rows if r.estimator == kind and r.metric == "observed_shrunk"]
        ax.scatter(null_plain, null_shrunk, s=12, marker="x", color=_COLORS.get(kind), label="permuted")
        ax.scatter(obs_p, obs_s, s=40, marker="o", color="black", label="observed")
        lim = max(null_plain + obs_p) if null_plain else 1.0
        ax.plot([0, lim], [0, lim], lw=0.5, color="gray")
        ax.set_xlabel("plain statistic")
        ax.set_ylabel(kind)
        ax.legend()
    fig.tight_layout()
    return fig


def _plot_ratio(table: ResultTable):
    fig, ax = plt.subplots(figsize=(5, 4))
    rows = _agg(table, "ratio")
    kinds = _estimators(rows)
    vals = [next(r.value for r in rows if r.estimator == k) for k in kinds]
    ax.bar(kinds, vals, color=[_COLORS.get(k) for k in kinds])
    ax.axhline(1.0, lw=0.5, color="gray")
    ax.set_ylabel("observed / null 95th percentile")
    fig.tight_layout()
    return fig


def _plot_spectra(table: ResultTable):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for ax, est in zip(axes, ("plain", "lw")):
        rows = [r for r in table.rows if r.metric == "singular_value" and r.estimator == est]
        for n in sorted({r.sweep for r in rows}):
            pts = sorted((r.repetition, r.value) for r in rows if r.sweep == n)
            ax.plot([p[0] + 1 for p in pts], [p[1] for p in pts], marker=".", label=f"n={int(n)}")
        ax.set_xlabel("component")
        ax.set_title(est)
        ax.set_yscale("log")
    axes[0].set_ylabel("singular value")
    axes[0].legend()
    fig.tight_layout()
    return fig


def _plot_singular(table: ResultTable):
    fig, ax = plt.subplots(figsize=(5, 4))
    width = 0.35
    ests = ("plain", "fcose")
    for k, metric in enumerate(("mse_f_mean", "mse_g_mean")):
        vals = []
        for est in ests:
            rows = _agg(table, metric)
            vals.append(next((r.value for r in rows if r.estimator == est), np.nan))
        ax.bar(np.arange(2) + k * width, vals, width, label=metric.replace("_mean", ""))
    ax.set_xticks(np.arange(2) + width / 2)
    ax.set_xticklabels(ests)
    ax.set_ylabel("mean squared RKHS error")
    ax.legend()
    fig.tight_layout()
    return fig


def _plot_oracle(table: ResultTable):
    fig, ax = plt.subplots(figsize=(5, 4))
    metrics = ("alpha2", "beta2", "delta2", "identity_gap")
    vals = [next(r.value for r in table.rows if r.metric == m) for m in metrics]
    ax.bar(metrics, vals)
    ax.set_ylabel("value")
    fig.tight_layout()
    return fig
