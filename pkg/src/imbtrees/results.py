"""Long-format experiment output: one metric value per row."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

COLUMNS = ("experiment", "beta", "mtry", "prevalence_level", "replicate", "metric", "value")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    metric: str
    value: float
    beta: float | None = None
    mtry: int | None = None
    prevalence_level: float | None = None
    replicate: int | None = None

    def factors(self) -> tuple:
        return (self.experiment, self.beta, self.mtry, self.prevalence_level)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        # repr is the shortest string that round-trips exactly
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, experiment: str, metric: str, value: float, **factors) -> None:
        self.rows.append(ResultRow(experiment, metric, float(value), **factors))

    def extend(self, rows: Iterable[ResultRow]) -> None:
        self.rows.extend(rows)

    def __iter__(self) -> Iterator[ResultRow]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, metric: str | None = None, **factors) -> list[ResultRow]:
        out = []
        for row in self.rows:
            if metric is not None and row.metric != metric:
                continue
            if all(getattr(row, k) == v for k, v in factors.items()):
                out.append(row)
        return out

    def value(self, metric: str, **factors) -> float:
        found = self.select(metric, **factors)
        if len(found) != 1:
            raise KeyError(f"{len(found)} rows match metric={metric!r} {factors}")
        return found[0].value

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame([{c: getattr(r, c) for c in COLUMNS} for r in self.rows], columns=list(COLUMNS))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for r in self.rows:
                writer.writerow([_fmt(getattr(r, c)) for c in COLUMNS])

    @classmethod
    def read_csv(cls, path: str | Path) -> "ResultTable":
        table = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != COLUMNS:
                raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
            for rec in reader:
                table.rows.append(
                    ResultRow(
                        experiment=rec["experiment"],
                        metric=rec["metric"],
                        value=float(rec["value"]),
                        beta=float(rec["beta"]) if rec["beta"] else None,
                        mtry=int(rec["mtry"]) if rec["mtry"] else None,
                        prevalence_level=float(rec["prevalence_level"]) if rec["prevalence_level"] else None,
                        replicate=int(rec["replicate"]) if rec["replicate"] else None,
                    )
                )
        return table

