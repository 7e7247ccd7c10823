"""Command-line interface.

Subcommands::

    synth        draw a synthetic paired sample to a delimited text file
    gram         centered gram matrices of an input sample
    shrink       shrinkage intensities and weights for an input sample
    hsic-test    permutation independence test on an input sample
    risk         quadratic-risk study          (experiment harness)
    power        test-power study              (experiment harness)
    spectra      operator spectra across n     (experiment harness)
    singular     singular-function accuracy    (experiment harness)
    scatter      plain-vs-shrunk permutation scatter
    ratio        observed/null-quantile ratio bars
    oracle-check oracle-constant consistency check

Experiment subcommands take ``--config FILE`` plus repeatable ``--set
key=value`` overrides and write ``results.csv`` and ``config.resolved``
(and plots with ``--svg``) into ``--out``. Exit codes: 0 success, 1 input
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    apply_overrides,
    build_config,
    config_hash,
    parse_config_text,
    render_config,
)
from .hsic import STATISTIC_KINDS, permutation_test
from .kernels import KernelSpec, gram_pair
from .results import fmt_float
from .shrinkage import fcose_fit, rho_lw, rho_scose
from .synthdata import DISTRIBUTION_KINDS, DistributionSpec, GeneratorError, sample
from . import experiments


class _Parser(argparse.ArgumentParser):
    # spec'd exit codes: usage problems are input errors (1), not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_sample_file(path: str, x_cols: int) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError(f"no observations in {path}")
    data = np.asarray(rows, dtype=np.float64)
    if not 1 <= x_cols < data.shape[1]:
        raise ValueError(f"--x-cols must split the {data.shape[1]} columns into two nonempty groups")
    return data[:, :x_cols], data[:, x_cols:]


def _write_sample_file(path, x: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for xi, yi in zip(x, y):
            fh.write(" ".join(fmt_float(v) for v in np.concatenate([xi, yi])) + "\n")


def _kernel_from_flags(args, points) -> KernelSpec:
    if args.kernel in ("gaussian", "laplace") and args.bandwidth == "median":
        from .kernels import median_heuristic

        return KernelSpec(args.kernel, bandwidth=median_heuristic(points))
    bw = 1.0 if args.bandwidth == "median" else float(args.bandwidth)
    return KernelSpec(args.kernel, degree=args.degree, offset=args.offset, bandwidth=bw)


def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", default="gaussian", choices=("linear", "polynomial", "gaussian", "laplace"))
    p.add_argument("--bandwidth", default="median", help="positive number or 'median' (default)")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--offset", type=float, default=1.0)


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="delimited text, one observation per line")
    p.add_argument("--x-cols", type=int, required=True, help="number of leading x columns")


def _cmd_synth(args) -> int:
    spec = DistributionSpec(
        kind=args.distribution,
        radius=args.radius,
        frequency=args.frequency,
        theta=args.theta,
        dim=args.dim,
        corner=args.corner,
        spread=args.spread,
        base=DistributionSpec(args.base_distribution) if args.base_distribution else None,
        seed=args.seed,
    )
    x, y = sample(spec, args.n)
    _write_sample_file(args.out, x, y)
    print(f"synth: wrote {args.n} observations ({x.shape[1]}+{y.shape[1]} columns) to {args.out}")
    return 0


def _cmd_gram(args) -> int:
    x, y = _read_sample_file(args.input, args.x_cols)
    g = gram_pair(x, y, _kernel_from_flags(args, x), _kernel_from_flags(args, y))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    np.savetxt(outdir / "k_centered.csv", g.k_centered, delimiter=",")
    np.savetxt(outdir / "l_centered.csv", g.l_centered, delimiter=",")
    print(f"gram: n={g.n}, wrote centered gram matrices to {outdir}")
    return 0


def _cmd_shrink(args) -> int:
    x, y = _read_sample_file(args.input, args.x_cols)
    g = gram_pair(x, y, _kernel_from_flags(args, x), _kernel_from_flags(args, y))
    lw = rho_lw(g)
    sc = rho_scose(g)
    fc = fcose_fit(g)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "shrinkage.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,rho,lambda,clamped,d2,b2,beta_min,beta_max\n")
        fh.write(f"lw,{fmt_float(lw.rho)},,{int(lw.clamped)},{fmt_float(lw.d2)},{fmt_float(lw.b2)},,\n")
        fh.write(f"scose,{fmt_float(sc.rho)},,{int(sc.clamped)},{fmt_float(sc.d2)},{fmt_float(sc.b2)},,\n")
        fh.write(
            f"fcose,,{fmt_float(fc.lam)},0,{fmt_float(fc.d2)},{fmt_float(fc.b2)},"
            f"{fmt_float(float(fc.beta.min()))},{fmt_float(float(fc.beta.max()))}\n"
        )
    print(
        f"shrink: n={g.n} rho_lw={lw.rho:.4f} rho_scose={sc.rho:.4f} "
        f"lambda_fcose={fc.lam:.4g}; wrote {outdir / 'shrinkage.csv'}"
    )
    return 0


def _cmd_hsic_test(args) -> int:
    x, y = _read_sample_file(args.input, args.x_cols)
    outcome = permutation_test(
        x,
        y,
        _kernel_from_flags(args, x),
        _kernel_from_flags(args, y),
        kind=args.kind,
        b=args.permutations,
        alpha=args.alpha,
        seed=args.seed,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "outcome.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,observed,p_value,threshold,alpha,permutations,rejected,insufficient_permutations\n")
        fh.write(
            f"{outcome.statistic_kind},{fmt_float(outcome.observed)},{fmt_float(outcome.p_value)},"
            f"{fmt_float(outcome.threshold)},{fmt_float(outcome.alpha)},{outcome.null_samples.size},"
            f"{int(outcome.rejected)},{int(outcome.insufficient_permutations)}\n"
        )
    np.savetxt(outdir / "null_samples.csv", outcome.null_samples, delimiter=",")
    print(
        f"hsic-test: kind={outcome.statistic_kind} observed={outcome.observed:.6g} "
        f"p={outcome.p_value:.6g} rejected={outcome.rejected}"
    )
    return 0


_EXPERIMENT_COMMANDS = {
    "risk": "risk_curve",
    "power": "power_curve",
    "spectra": "spectra",
    "singular": "singular_study",
    "scatter": "scatter",
    "ratio": "ratio_bars",
    "oracle-check": "oracle_check",
}


def _cmd_experiment(args) -> int:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values = parse_config_text(fh.read())
    values = apply_overrides(values, args.set or [])
    values["experiment"] = _EXPERIMENT_COMMANDS[args.command]
    cfg = build_config(values)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    table = experiments.run(cfg)
    table.write_csv(outdir / "results.csv")
    with open(outdir / "config.resolved", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_config(cfg))
    if args.svg:
        from .plots import plot_table
        from .results import read_csv

        # plots derive from the CSV on disk, never from live statistics
        plot_table(read_csv(outdir / "results.csv"), cfg.experiment, outdir / f"{cfg.experiment}.svg")
    print(
        f"{cfg.experiment}: wrote {len(table.rows)} rows to {outdir / 'results.csv'} "
        f"(config {config_hash(cfg)[:12]})"
    )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="opshrink", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="draw a synthetic paired sample", description="Draw a seeded paired sample and write it as delimited text (x columns then y columns).")
    p.add_argument("--distribution", required=True, choices=DISTRIBUTION_KINDS)
    p.add_argument("--base-distribution", default=None, choices=DISTRIBUTION_KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--frequency", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--corner", type=float, default=2.0)
    p.add_argument("--spread", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("gram", help="centered gram matrices of an input sample")
    _add_input_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gram)

    p = sub.add_parser("shrink", help="shrinkage intensities for an input sample")
    _add_input_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_shrink)

    p = sub.add_parser("hsic-test", help="permutation independence test")
    _add_input_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--kind", default="hsic", choices=STATISTIC_KINDS)
    p.add_argument("--permutations", "--B", type=int, default=200, dest="permutations")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_hsic_test)

    for name, kind in _EXPERIMENT_COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")
        p.set_defaults(fn=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse help exits 0; our error() exits 1
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"opshrink: error: {exc}", file=sys.stderr)
        return 1
    except GeneratorError as exc:
        print(f"opshrink: runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"opshrink: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
