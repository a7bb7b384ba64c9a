"""Trial records, the aggregated error table and their on-disk formats."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import IoError

CSV_COLUMNS = ("method", "pos_mean_mm", "pos_min_mm", "pos_max_mm", "ori_mean_deg", "ori_min_deg", "ori_max_deg")
RECORD_COLUMNS = ("method", "correction", "object_id", "pose_id", "seed",
                  "final_pos_error", "final_yaw_error", "success")


@dataclass(frozen=True)
class TrialRecord:
    """One episode. Errors are in mm and degrees."""

    method: str
    correction: bool | None
    object_id: int
    pose_id: int
    seed: int
    final_pos_error: float
    final_yaw_error: float
    per_step_estimates: list | None = None
    success: bool | None = None

    def __post_init__(self):
        if self.final_pos_error < 0 or self.final_yaw_error < 0:
            raise ValueError("errors must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["per_step_estimates"] is None:
            del d["per_step_estimates"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TrialRecord:
        return cls(d["method"], d.get("correction"), int(d["object_id"]), int(d["pose_id"]), int(d["seed"]),
                   float(d["final_pos_error"]), float(d["final_yaw_error"]),
                   d.get("per_step_estimates"), d.get("success"))


@dataclass(frozen=True)
class ReportRow:
    method: str
    pos_mean: float
    pos_min: float
    pos_max: float
    ori_mean: float
    ori_min: float
    ori_max: float

    def values(self) -> tuple[float, ...]:
        return (self.pos_mean, self.pos_min, self.pos_max, self.ori_mean, self.ori_min, self.ori_max)


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[ReportRow, ...]

    def __getitem__(self, method: str) -> ReportRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def __len__(self) -> int:
        return len(self.rows)

    def methods(self) -> list[str]:
        return [r.method for r in self.rows]


def aggregate(records: Sequence[TrialRecord], order: Sequence[str] | None = None) -> ReportTable:
    """Mean/min/max over poses for each object, then averaged across objects.

    Rows follow ``order``; methods not listed there follow in first-seen order.
    """
    by_method: dict[str, dict[int, list[TrialRecord]]] = {}
    for r in records:
        by_method.setdefault(r.method, {}).setdefault(r.object_id, []).append(r)
    methods = [m for m in (order or []) if m in by_method]
    methods += [m for m in by_method if m not in methods]
    rows = []
    for m in methods:
        per_obj = []
        for obj in sorted(by_method[m]):
            pos = np.array([r.final_pos_error for r in by_method[m][obj]])
            ori = np.array([r.final_yaw_error for r in by_method[m][obj]])
            per_obj.append((pos.mean(), pos.min(), pos.max(), ori.mean(), ori.min(), ori.max()))
        stats = np.mean(np.array(per_obj), axis=0)
        rows.append(ReportRow(m, *(float(v) for v in stats)))
    return ReportTable(tuple(rows))


def _table_csv(table: ReportTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in table.rows:
        w.writerow([r.method, *(f"{v:.4f}" for v in r.values())])
    return buf.getvalue()


def _records_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow([r.method, "" if r.correction is None else int(r.correction), r.object_id, r.pose_id, r.seed,
                    f"{r.final_pos_error:.6f}", f"{r.final_yaw_error:.6f}",
                    "" if r.success is None else int(r.success)])
    return buf.getvalue()


def _jsonl(items: Sequence[dict]) -> str:
    return "".join(json.dumps(d, sort_keys=True) + "\n" for d in items)


def render(results: ReportTable | Sequence[TrialRecord], fmt: str) -> str:
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown report format {fmt!r}")
    if isinstance(results, ReportTable):
        if fmt == "csv":
            return _table_csv(results)
        return _jsonl([asdict(r) for r in results.rows])
    if fmt == "csv":
        return _records_csv(results)
    return _jsonl([r.to_dict() for r in results])


def emit_report(results: ReportTable | Sequence[TrialRecord], fmt: str, path) -> Path:
    if len(results) == 0:
        raise ValueError("no results to report")
    text = render(results, fmt)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise IoError(f"cannot write report {path}: {e}") from e
    return path


def load_records(path) -> list[TrialRecord]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    return [TrialRecord.from_dict(json.loads(line)) for line in lines if line.strip()]


def success_table_csv(records: Sequence[TrialRecord]) -> str:
    """Success rate (%) per method, in first-seen order."""
    counts: dict[str, list[int]] = {}
    for r in records:
        c = counts.setdefault(r.method, [0, 0])
        c[0] += int(bool(r.success))
        c[1] += 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("method", "n_trials", "success_rate_pct"))
    for m, (ok, n) in counts.items():
        w.writerow((m, n, f"{100.0 * ok / n:.1f}"))
    return buf.getvalue()
