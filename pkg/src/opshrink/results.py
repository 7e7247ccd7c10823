"""Long-format result tables with a provenance header, written as CSV.

Layout: a ``#``-prefixed metadata block (config hash, seed, version), a
column header, then one row per (estimator, sweep value, repetition,
metric). Per-repetition metrics carry their repetition index; aggregate
metrics (means, standard errors, rates) use repetition -1. Rows are sorted
and floats rendered with shortest round-trip repr, so a rerun with the
same seed produces byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass

COLUMNS = ("experiment", "estimator", "sweep", "repetition", "metric", "value")

AGGREGATE = -1


@dataclass(frozen=True)
class Row:
    experiment: str
    estimator: str
    sweep: float
    repetition: int
    metric: str
    value: float


@dataclass
class ResultTable:
    rows: list
    config_hash: str
    seed: int
    version: str

    def sorted_rows(self) -> list:
        return sorted(
            self.rows,
            key=lambda r: (r.metric, r.estimator, r.sweep, r.repetition),
        )

    def render_csv(self) -> str:
        lines = [
            f"# config_hash = {self.config_hash}",
            f"# seed = {self.seed}",
            f"# version = {self.version}",
            ",".join(COLUMNS),
        ]
        for r in self.sorted_rows():
            lines.append(
                f"{r.experiment},{r.estimator},{fmt_float(r.sweep)},{r.repetition},"
                f"{r.metric},{fmt_float(r.value)}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render_csv())

    def select(self, metric: str | None = None, estimator: str | None = None) -> list:
        out = []
        for r in self.rows:
            if metric is not None and r.metric != metric:
                continue
            if estimator is not None and r.estimator != estimator:
                continue
            out.append(r)
        return out


def fmt_float(v: float) -> str:
    f = float(v)
    if f != f:  # nan
        return "nan"
    return repr(f)


def read_csv(path) -> ResultTable:
    """Parse a file previously written by :meth:`ResultTable.write_csv`."""
    meta: dict[str, str] = {}
    rows: list[Row] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
                continue
            if line.startswith(COLUMNS[0] + ","):
                continue
            parts = line.split(",")
            if len(parts) != len(COLUMNS):
                raise ValueError(f"malformed result row: {line!r}")
            rows.append(
                Row(
                    experiment=parts[0],
                    estimator=parts[1],
                    sweep=float(parts[2]),
                    repetition=int(parts[3]),
                    metric=parts[4],
                    value=float(parts[5]),
                )
            )
    return ResultTable(
        rows=rows,
        config_hash=meta.get("config_hash", ""),
        seed=int(meta.get("seed", "0")),
        version=meta.get("version", ""),
    )
