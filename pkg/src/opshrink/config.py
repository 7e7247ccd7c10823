"""Flat key-value experiment configuration with a typed schema.

The on-disk format is one ``key = value`` per line, ``#`` comments, lists
comma-separated. Unknown keys are rejected. The same schema backs file
parsing and command-line overrides, and the resolved (defaults filled in)
configuration has a canonical rendering used for provenance hashing.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field

from .kernels import KERNEL_KINDS, KernelSpec, median_heuristic
from .synthdata import DISTRIBUTION_KINDS, DistributionSpec

EXPERIMENT_KINDS = (
    "risk_curve",
    "power_curve",
    "scatter",
    "ratio_bars",
    "spectra",
    "singular_study",
    "oracle_check",
)

SWEEP_KINDS = ("n", "radius", "theta", "frequency")

STAT_KINDS = ("hsic", "hsic_lw", "hsic_scose", "hsic_fcose")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class KernelConfig:
    """Kernel kind plus either a fixed bandwidth or the median directive."""

    kind: str = "gaussian"
    bandwidth: float | str = "median"
    degree: int = 2
    offset: float = 1.0

    def resolve(self, points) -> KernelSpec:
        """Concrete KernelSpec; 'median' bandwidths come from ``points``."""
        bw = self.bandwidth
        if self.kind in ("gaussian", "laplace") and bw == "median":
            bw = median_heuristic(points)
        elif bw == "median":
            bw = 1.0
        return KernelSpec(self.kind, degree=self.degree, offset=self.offset, bandwidth=float(bw))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "risk_curve"
    distribution: DistributionSpec = field(
        default_factory=lambda: DistributionSpec("hollow_gaussian", radius=1.5)
    )
    kernel_x: KernelConfig = KernelConfig()
    kernel_y: KernelConfig = KernelConfig()
    n_values: tuple[int, ...] = (20, 50, 100)
    sweep: str = "n"
    sweep_values: tuple[float, ...] = ()
    repetitions: int = 100
    permutations: int = 200
    alpha: float = 0.05
    proxy_n: int = 2000
    seed: int = 0
    workers: int = 1
    kinds: tuple[str, ...] = STAT_KINDS
    top_k: int = 10
    lambda_grid_size: int = 30

    def effective_sweep_values(self) -> tuple[float, ...]:
        if self.sweep == "n":
            return tuple(float(v) for v in self.n_values)
        return self.sweep_values

    def distribution_at(self, value: float) -> DistributionSpec:
        if self.sweep == "n":
            return self.distribution
        return dataclasses.replace(self.distribution, **{self.sweep: value})

    def n_at(self, value: float) -> int:
        if self.sweep == "n":
            return int(value)
        return self.n_values[0]


# key -> (parser, default-source) for the flat format
def _parse_bool(v: str) -> bool:
    if v.lower() in ("true", "1", "yes"):
        return True
    if v.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def _parse_enum(options):
    def parse(v: str) -> str:
        if v not in options:
            raise ConfigError(f"expected one of {options}, got {v!r}")
        return v

    return parse


def _parse_float(v: str) -> float:
    try:
        return float(v)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {v!r}") from exc


def _parse_int(v: str) -> int:
    try:
        return int(v)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {v!r}") from exc


def _parse_bandwidth(v: str) -> float | str:
    if v == "median":
        return "median"
    bw = _parse_float(v)
    if not bw > 0:
        raise ConfigError("bandwidth must be positive or 'median'")
    return bw


def _parse_int_list(v: str) -> tuple[int, ...]:
    return tuple(_parse_int(p.strip()) for p in v.split(",") if p.strip())


def _parse_float_list(v: str) -> tuple[float, ...]:
    return tuple(_parse_float(p.strip()) for p in v.split(",") if p.strip())


def _parse_str_list(options):
    def parse(v: str) -> tuple[str, ...]:
        items = tuple(p.strip() for p in v.split(",") if p.strip())
        for item in items:
            if item not in options:
                raise ConfigError(f"expected items from {options}, got {item!r}")
        return items

    return parse


_SCHEMA = {
    "experiment": _parse_enum(EXPERIMENT_KINDS),
    "distribution": _parse_enum(DISTRIBUTION_KINDS),
    "base_distribution": _parse_enum(DISTRIBUTION_KINDS),
    "radius": _parse_float,
    "frequency": _parse_float,
    "theta": _parse_float,
    "dim": _parse_int,
    "corner": _parse_float,
    "spread": _parse_float,
    "kernel": _parse_enum(KERNEL_KINDS),
    "bandwidth": _parse_bandwidth,
    "degree": _parse_int,
    "offset": _parse_float,
    "kernel_y": _parse_enum(KERNEL_KINDS),
    "bandwidth_y": _parse_bandwidth,
    "degree_y": _parse_int,
    "offset_y": _parse_float,
    "n": _parse_int_list,
    "sweep": _parse_enum(SWEEP_KINDS),
    "sweep_values": _parse_float_list,
    "repetitions": _parse_int,
    "permutations": _parse_int,
    "alpha": _parse_float,
    "proxy_n": _parse_int,
    "seed": _parse_int,
    "workers": _parse_int,
    "kinds": _parse_str_list(STAT_KINDS),
    "top_k": _parse_int,
    "lambda_grid_size": _parse_int,
}


def parse_config_text(text: str) -> dict:
    """Parse the flat format into a typed key->value dict."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _SCHEMA[key](val)
    return values


def apply_overrides(values: dict, overrides) -> dict:
    """Merge ``key=value`` override strings (flags beat file values)."""
    merged = dict(values)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        merged[key] = _SCHEMA[key](val.strip())
    return merged


def _distribution_from(values: dict) -> DistributionSpec:
    kind = values.get("distribution", "hollow_gaussian")
    params = dict(
        radius=values.get("radius", 0.0),
        frequency=values.get("frequency", 1.0),
        theta=values.get("theta", 0.0),
        dim=values.get("dim", 1),
        corner=values.get("corner", 2.0),
        spread=values.get("spread"),
    )
    base = None
    if kind == "independent_product":
        base_kind = values.get("base_distribution")
        if base_kind is None:
            raise ConfigError("independent_product requires base_distribution")
        base = DistributionSpec(base_kind, **params)
    try:
        return DistributionSpec(kind, base=base, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_config(values: dict) -> ExperimentConfig:
    """Validate a parsed key->value dict and produce the typed config."""
    dist = _distribution_from(values)
    kx = KernelConfig(
        kind=values.get("kernel", "gaussian"),
        bandwidth=values.get("bandwidth", "median"),
        degree=values.get("degree", 2),
        offset=values.get("offset", 1.0),
    )
    ky = KernelConfig(
        kind=values.get("kernel_y", kx.kind),
        bandwidth=values.get("bandwidth_y", kx.bandwidth),
        degree=values.get("degree_y", kx.degree),
        offset=values.get("offset_y", kx.offset),
    )
    try:
        KernelSpec(kx.kind, degree=kx.degree, offset=kx.offset, bandwidth=1.0)
        KernelSpec(ky.kind, degree=ky.degree, offset=ky.offset, bandwidth=1.0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = ExperimentConfig(
        experiment=values.get("experiment", "risk_curve"),
        distribution=dist,
        kernel_x=kx,
        kernel_y=ky,
        n_values=tuple(values.get("n", (20, 50, 100))),
        sweep=values.get("sweep", "n"),
        sweep_values=tuple(values.get("sweep_values", ())),
        repetitions=values.get("repetitions", 100),
        permutations=values.get("permutations", 200),
        alpha=values.get("alpha", 0.05),
        proxy_n=values.get("proxy_n", 2000),
        seed=values.get("seed", 0),
        workers=values.get("workers", 1),
        kinds=tuple(values.get("kinds", STAT_KINDS)),
        top_k=values.get("top_k", 10),
        lambda_grid_size=values.get("lambda_grid_size", 30),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if not 0.0 < cfg.alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    if cfg.permutations < 1.0 / cfg.alpha - 1.0:
        raise ConfigError(
            f"permutations must be >= 1/alpha - 1 = {1.0 / cfg.alpha - 1.0:.0f}"
        )
    if not cfg.n_values:
        raise ConfigError("n must list at least one sample size")
    if any(n < 1 for n in cfg.n_values):
        raise ConfigError("sample sizes must be >= 1")
    if len(set(cfg.n_values)) != len(cfg.n_values):
        raise ConfigError("n values must be distinct")
    if len(set(cfg.sweep_values)) != len(cfg.sweep_values):
        raise ConfigError("sweep_values must be distinct")
    if cfg.proxy_n <= max(cfg.n_values):
        raise ConfigError("proxy_n must exceed every n")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.top_k < 1:
        raise ConfigError("top_k must be >= 1")
    if cfg.lambda_grid_size < 1:
        raise ConfigError("lambda_grid_size must be >= 1")
    if cfg.sweep != "n":
        if len(cfg.n_values) != 1:
            raise ConfigError("a parameter sweep requires a single n")
        if not cfg.sweep_values:
            raise ConfigError("sweep_values required when sweep is a parameter")
        for v in cfg.sweep_values:
            try:
                cfg.distribution_at(v)  # range-checks the parameter
            except ValueError as exc:
                raise ConfigError(f"sweep value {v!r}: {exc}") from exc
    if not cfg.kinds:
        raise ConfigError("kinds must list at least one statistic")


def load_config(path, overrides=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        values = parse_config_text(fh.read())
    return build_config(apply_overrides(values, overrides))


def config_from_overrides(overrides) -> ExperimentConfig:
    return build_config(apply_overrides({}, overrides))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(i) for i in v)
    return str(v)


def render_config(cfg: ExperimentConfig) -> str:
    """Canonical key = value rendering of the effective configuration."""
    d = cfg.distribution
    items: list[tuple[str, object]] = [
        ("experiment", cfg.experiment),
        ("distribution", d.kind),
        ("radius", d.radius),
        ("frequency", d.frequency),
        ("theta", d.theta),
        ("dim", d.dim),
        ("corner", d.corner),
        ("spread", "default" if d.spread is None else d.spread),
        ("kernel", cfg.kernel_x.kind),
        ("bandwidth", cfg.kernel_x.bandwidth),
        ("degree", cfg.kernel_x.degree),
        ("offset", cfg.kernel_x.offset),
        ("kernel_y", cfg.kernel_y.kind),
        ("bandwidth_y", cfg.kernel_y.bandwidth),
        ("degree_y", cfg.kernel_y.degree),
        ("offset_y", cfg.kernel_y.offset),
        ("n", cfg.n_values),
        ("sweep", cfg.sweep),
        ("sweep_values", cfg.sweep_values),
        ("repetitions", cfg.repetitions),
        ("permutations", cfg.permutations),
        ("alpha", cfg.alpha),
        ("proxy_n", cfg.proxy_n),
        ("seed", cfg.seed),
        ("workers", cfg.workers),
        ("kinds", cfg.kinds),
        ("top_k", cfg.top_k),
        ("lambda_grid_size", cfg.lambda_grid_size),
    ]
    if d.base is not None:
        items.insert(2, ("base_distribution", d.base.kind))
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in items)


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of the canonical rendering, minus fields that cannot change
    results (worker count)."""
    lines = [
        ln for ln in render_config(cfg).splitlines() if not ln.startswith("workers =")
    ]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()
