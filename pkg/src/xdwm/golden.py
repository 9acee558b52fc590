"""Golden-file regression checks for CSV outputs.

Every CSV in the golden directory must exist in the run directory. Comment
lines must match exactly, except ``# generated:`` timestamp lines. Numeric
cells are compared with per-column ``(rtol, atol)`` tolerances; any other
cell must match as text.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

DEFAULT_TOL = (1e-9, 0.0)
TIMESTAMP_PREFIX = "# generated:"


class GoldenMismatch(AssertionError):
    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__(f"{len(self.problems)} golden mismatches:\n" + "\n".join(self.problems))


@dataclass
class GoldenReport:
    files: List[str] = field(default_factory=list)
    cells: int = 0
    problems: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def _split(path) -> Tuple[List[str], List[List[str]]]:
    comments, body = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                if not line.startswith(TIMESTAMP_PREFIX):
                    comments.append(line.rstrip("\n"))
            else:
                body.append(line)
    return comments, list(csv.reader(body))


def _number(s: str) -> Optional[float]:
    try:
        return float(s)
    except ValueError:
        return None


def compare_csv(run_path, golden_path, tolerances: Mapping[str, Tuple[float, float]] = {},
                report: Optional[GoldenReport] = None) -> GoldenReport:
    report = report or GoldenReport()
    name = os.path.basename(golden_path)
    report.files.append(name)
    rc, rows = _split(run_path)
    gc, grows = _split(golden_path)
    if rc != gc:
        report.problems.append(f"{name}: header comments differ")
    if not grows:
        return report
    if not rows or rows[0] != grows[0]:
        report.problems.append(f"{name}: column names differ")
        return report
    cols = grows[0]
    if len(rows) != len(grows):
        report.problems.append(f"{name}: {len(rows) - 1} rows, golden has {len(grows) - 1}")
    for i, (r, g) in enumerate(zip(rows[1:], grows[1:]), 1):
        for c, a, b in zip(cols, r, g):
            report.cells += 1
            x, y = _number(a), _number(b)
            if x is None or y is None:
                if a != b:
                    report.problems.append(f"{name}:{i}:{c}: {a!r} != {b!r}")
                continue
            rtol, atol = tolerances.get(c, DEFAULT_TOL)
            if math.isnan(x) and math.isnan(y):
                continue
            if not abs(x - y) <= atol + rtol * abs(y):
                report.problems.append(f"{name}:{i}:{c}: {a} vs golden {b}")
    return report


def compare_golden(run_dir, golden_dir,
                   tolerances: Mapping[str, Tuple[float, float]] = {}) -> GoldenReport:
    """Compare every golden CSV with its counterpart; raise on any mismatch."""
    names = sorted(n for n in os.listdir(golden_dir) if n.endswith(".csv"))
    if not names:
        raise FileNotFoundError(f"no golden CSV files in {golden_dir}")
    report = GoldenReport()
    for n in names:
        run_path = os.path.join(run_dir, n)
        if not os.path.exists(run_path):
            report.problems.append(f"{n}: missing from run output")
            continue
        compare_csv(run_path, os.path.join(golden_dir, n), tolerances, report)
    if report.problems:
        raise GoldenMismatch(report.problems)
    return report
