import numpy as np
import pytest

from opshrink.config import build_config
from opshrink.experiments import (
    run,
    run_power_curve,
    run_ratio_bars,
    run_risk_curve,
    run_scatter,
    run_singular_study,
    run_spectra,
)


def _risk_cfg(workers=1):
    return build_config(
        {
            "experiment": "risk_curve",
            "distribution": "hollow_gaussian",
            "radius": 1.0,
            "n": (8, 12),
            "repetitions": 4,
            "proxy_n": 80,
            "seed": 17,
            "workers": workers,
        }
    )


def test_risk_row_counts_and_aggregates():
    table = run_risk_curve(_risk_cfg())
    risk_rows = table.select(metric="risk")
    assert len(risk_rows) == 4 * 2 * 4  # reps x sweeps x estimators
    assert len(table.select(metric="risk_mean")) == 2 * 4
    assert len(table.select(metric="risk_se")) == 2 * 4
    assert all(r.value >= 0.0 for r in risk_rows)


def test_risk_deterministic_and_worker_invariant():
    a = run_risk_curve(_risk_cfg()).render_csv()
    b = run_risk_curve(_risk_cfg()).render_csv()
    c = run_risk_curve(_risk_cfg(workers=2)).render_csv()
    assert a == b == c


def test_run_dispatcher():
    table = run(_risk_cfg())
    assert table.rows


def test_power_strong_dependence():
    # y duplicates x, so every statistic rejects at every repetition
    cfg = build_config(
        {
            "experiment": "power_curve",
            "distribution": "gaussian_nd",
            "dim": 1,
            "n": (40,),
            "repetitions": 4,
            "permutations": 60,
            "seed": 18,
        }
    )
    table = run_power_curve(cfg)
    for kind in cfg.kinds:
        power = next(r.value for r in table.select(metric="power") if r.estimator == kind)
        assert power == 1.0
    assert len(table.select(metric="reject")) == 4 * 1 * 4
    cond = table.select(metric="p_reject_given_plain_reject")
    assert {r.estimator for r in cond} == {"hsic_lw", "hsic_scose", "hsic_fcose"}
    events = next(r.value for r in table.select(metric="n_plain_reject"))
    assert events == 4.0
    insuff = table.select(metric="cond_insufficient")
    assert all(r.value == 1.0 for r in insuff)  # 4 reps < 5 conditioning events


def test_power_worker_invariant():
    base = {
        "experiment": "power_curve",
        "distribution": "four_gaussians",
        "theta": 0.3,
        "n": (12,),
        "repetitions": 4,
        "permutations": 30,
        "seed": 19,
        "kinds": ("hsic", "hsic_lw"),
    }
    a = run_power_curve(build_config(base)).render_csv()
    b = run_power_curve(build_config({**base, "workers": 3})).render_csv()
    assert a == b


def test_spectra_scaling_and_proxy_rho():
    cfg = build_config(
        {
            "experiment": "spectra",
            "distribution": "hollow_gaussian",
            "radius": 1.5,
            "n": (10, 25),
            "proxy_n": 300,
            "seed": 20,
            "top_k": 6,
        }
    )
    table = run_spectra(cfg)
    rho = {r.sweep: r.value for r in table.select(metric="rho_lw")}
    assert rho[300.0] < rho[10.0]
    for n in (10.0, 25.0, 300.0):
        plain = sorted(
            (r.repetition, r.value) for r in table.select(metric="singular_value", estimator="plain") if r.sweep == n
        )
        lw = sorted(
            (r.repetition, r.value) for r in table.select(metric="singular_value", estimator="lw") if r.sweep == n
        )
        pv = np.array([v for _, v in plain])
        lv = np.array([v for _, v in lw])
        np.testing.assert_array_equal(lv, (1.0 - rho[n]) * pv)
        assert np.all(np.diff(pv) <= 1e-15)  # sorted nonincreasing


def test_spectra_covariance_upward_bias():
    # small-sample top eigenvalue of a high-dimensional identity covariance
    # overshoots the true unit value
    cfg = build_config(
        {
            "experiment": "spectra",
            "distribution": "gaussian_nd",
            "dim": 50,
            "kernel": "linear",
            "n": (20,),
            "proxy_n": 500,
            "seed": 21,
            "top_k": 10,
        }
    )
    table = run_spectra(cfg)
    top = max(r.value for r in table.select(metric="singular_value", estimator="plain") if r.sweep == 20.0)
    assert top > 1.0


def test_singular_study_rows_and_direction_smoke():
    cfg = build_config(
        {
            "experiment": "singular_study",
            "distribution": "sinusoid",
            "frequency": 1.0,
            "n": (15,),
            "repetitions": 6,
            "proxy_n": 120,
            "seed": 22,
        }
    )
    table = run_singular_study(cfg)
    for est in ("plain", "fcose"):
        assert len(table.select(metric="mse_f", estimator=est)) == 6
        assert len(table.select(metric="mse_g", estimator=est)) == 6
        assert next(r.value for r in table.select(metric="n_skipped", estimator=est)) == 0.0
        assert next(r.value for r in table.select(metric="mse_f_mean", estimator=est)) >= 0.0


def test_singular_study_skips_rank_zero():
    cfg = build_config(
        {
            "experiment": "singular_study",
            "distribution": "sinusoid",
            "n": (1,),
            "repetitions": 3,
            "proxy_n": 60,
            "seed": 23,
        }
    )
    table = run_singular_study(cfg)
    for est in ("plain", "fcose"):
        assert next(r.value for r in table.select(metric="n_skipped", estimator=est)) == 3.0
        assert not table.select(metric="mse_f", estimator=est)


def test_scatter_rows():
    cfg = build_config(
        {
            "experiment": "scatter",
            "distribution": "four_gaussians",
            "theta": 0.19634954084936207,
            "n": (15,),
            "repetitions": 2,
            "permutations": 25,
            "seed": 24,
            "kinds": ("hsic", "hsic_lw"),
        }
    )
    table = run_scatter(cfg)
    for kind in cfg.kinds:
        plain = [r.value for r in table.select(metric="hsic_plain", estimator=kind)]
        shrunk = [r.value for r in table.select(metric="hsic_shrunk", estimator=kind)]
        assert len(plain) == len(shrunk) == 2 * 25
        if kind == "hsic":
            assert plain == shrunk
        else:
            assert all(s <= p + 1e-15 for p, s in zip(plain, shrunk))
        assert len(table.select(metric="observed_plain", estimator=kind)) == 2


def test_ratio_bars_strong_dependence():
    cfg = build_config(
        {
            "experiment": "ratio_bars",
            "distribution": "gaussian_nd",
            "dim": 1,
            "n": (30,),
            "repetitions": 3,
            "permutations": 40,
            "seed": 25,
            "kinds": ("hsic", "hsic_lw"),
        }
    )
    table = run_ratio_bars(cfg)
    ratios = {r.estimator: r.value for r in table.select(metric="ratio")}
    assert all(v > 1.0 for v in ratios.values())
    assert len(table.select(metric="observed")) == 3 * 2


def test_table_header_matches_config_hash():
    from opshrink.config import config_hash

    cfg = _risk_cfg()
    table = run_risk_curve(cfg)
    assert table.config_hash == config_hash(cfg)


def test_ratio_bars_hollow_shrunk_exceed_plain():
    # in the powered regime the shrunk statistics separate further from
    # their permutation nulls than the plain one
    cfg = build_config(
        {
            "experiment": "ratio_bars",
            "distribution": "hollow_gaussian",
            "radius": 2.2,
            "n": (60,),
            "repetitions": 30,
            "permutations": 100,
            "seed": 44,
        }
    )
    table = run_ratio_bars(cfg)
    ratios = {r.estimator: r.value for r in table.select(metric="ratio")}
    assert ratios["hsic_lw"] > ratios["hsic"]
    assert ratios["hsic_scose"] > ratios["hsic"]
    assert ratios["hsic_fcose"] > ratios["hsic"]


@pytest.mark.parametrize("kern", ["linear", "polynomial"])
def test_risk_ordering_other_kernels(kern):
    cfg = build_config(
        {
            "experiment": "risk_curve",
            "distribution": "hollow_gaussian",
            "radius": 1.5,
            "kernel": kern,
            "n": (20,),
            "repetitions": 100,
            "proxy_n": 1000,
            "seed": 45,
        }
    )
    table = run_risk_curve(cfg)
    means = {r.estimator: r.value for r in table.select(metric="risk_mean")}
    assert means["lw"] < means["plain"]
    assert means["scose"] < means["plain"]
    assert means["fcose"] > means["lw"]  # uniform scaling wins on quadratic risk
