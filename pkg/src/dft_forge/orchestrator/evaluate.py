"""Batch repair over a test split and the repair-rate summary."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .repair import RepairAborted, RepairSession, Status

CSV_FIELDS = ("design_id", "status", "iterations", "s_max")


@dataclass(frozen=True)
class SummaryRow:
    design_id: str
    status: str
    iterations: int
    s_max: float | None

    @classmethod
    def from_session(cls, s: RepairSession) -> "SummaryRow":
        return cls(s.design_id, s.status.value if s.status else "", len(s.iterations), s.s_max)

    def as_csv(self) -> list[str]:
        return [self.design_id, self.status, str(self.iterations),
                "" if self.s_max is None else f"{self.s_max:.6f}"]


def write_summary(rows: Sequence[SummaryRow], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in sorted(rows, key=lambda r: r.design_id):
        w.writerow(r.as_csv())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_summary(path: str | Path) -> list[SummaryRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected summary columns {reader.fieldnames}")
        return [SummaryRow(r["design_id"], r["status"], int(r["iterations"]),
                           float(r["s_max"]) if r["s_max"] else None) for r in reader]


def repair_rate(rows: Sequence[SummaryRow]) -> float:
    """Fraction of sessions that ended REPAIRED; 0.0 for an empty batch."""
    if not rows:
        return 0.0
    return sum(r.status == Status.REPAIRED.value for r in rows) / len(rows)


def improvement(rag_rows: Sequence[SummaryRow], baseline_rows: Sequence[SummaryRow]) -> float | None:
    """Ratio of repair rates, with retrieval over without; None if the baseline never succeeds."""
    base = repair_rate(baseline_rows)
    return None if base == 0.0 else repair_rate(rag_rows) / base


def run_batch(designs: Sequence[tuple[str, str]], run_one: Callable[[str, str, Path], RepairSession],
              out_dir: str | Path, jobs: int = 1) -> list[SummaryRow]:
    """Repair every ``(design_id, source)``; sessions go to ``out_dir/sessions``.

    ``run_one(design_id, source, session_path)`` performs one session. Sessions
    are independent, so they run on a thread pool; the CSV is sorted by id and
    therefore independent of completion order.
    """
    out_dir = Path(out_dir)
    sess_dir = out_dir / "sessions"
    sess_dir.mkdir(parents=True, exist_ok=True)

    def one(item):
        design_id, source = item
        try:
            return run_one(design_id, source, sess_dir / f"{design_id}.json")
        except RepairAborted as exc:
            return exc.session

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        sessions = list(pool.map(one, designs))
    rows = [SummaryRow.from_session(s) for s in sessions]
    write_summary(rows, out_dir / "summary.csv")
    return rows
