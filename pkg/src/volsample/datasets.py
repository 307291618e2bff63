"""Dataset ingestion: dense CSV and sparse libsvm-style text files.

CSV: one row per line, comma separated, last column is the response; a
header line is auto-detected (any non-numeric token in the first line).
LibSVM: ``<label> <index>:<value> ...`` with 1-based indices, densified to
0-based columns with missing entries as 0.0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .regression import RegressionProblem

FORMATS = ("csv", "libsvm")


@dataclass(frozen=True)
class Dataset:
    problem: RegressionProblem
    source: str
    format: str
    feature_count: int
    row_count: int


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def parse_csv_text(text: str, source: str = "<string>") -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty file")
    start = 0
    first = [t.strip() for t in lines[0].split(",")]
    if not all(_is_float(t) for t in first):
        start = 1  # header line
    rows = []
    width = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        tokens = [t.strip() for t in line.split(",")]
        try:
            vals = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if width is None:
            width = len(vals)
            if width < 2:
                raise ParseError("need at least one feature column and a "
                                 "response column", line=lineno)
        elif len(vals) != width:
            raise DimensionMismatch(
                f"line {lineno}: expected {width} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ParseError("no data rows")
    arr = np.asarray(rows)
    problem = RegressionProblem(X=arr[:, :-1], y=arr[:, -1])
    return Dataset(problem=problem, source=source, format="csv",
                   feature_count=arr.shape[1] - 1, row_count=arr.shape[0])


def parse_libsvm_text(text: str, source: str = "<string>") -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty file")
    labels = []
    entries = []  # per-row {0-based col: value}
    max_col = 0
    for lineno, line in enumerate(lines, start=1):
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", line=lineno) from None
        row = {}
        for tok in tokens[1:]:
            if ":" not in tok:
                raise ParseError(f"expected index:value, got {tok!r}", line=lineno)
            idx_s, val_s = tok.split(":", 1)
            try:
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise ParseError(f"bad pair {tok!r}", line=lineno) from None
            if idx < 1:
                raise ParseError(f"libsvm indices are 1-based, got {idx}",
                                 line=lineno)
            row[idx - 1] = val
            max_col = max(max_col, idx)
        entries.append(row)
    if max_col == 0:
        raise ParseError("no features found")
    X = np.zeros((len(entries), max_col))
    for r, row in enumerate(entries):
        for c, v in row.items():
            X[r, c] = v
    problem = RegressionProblem(X=X, y=np.asarray(labels))
    return Dataset(problem=problem, source=source, format="libsvm",
                   feature_count=max_col, row_count=len(entries))


def parse_dataset(path, format: str) -> Dataset:
    if format not in FORMATS:
        raise ParseError(f"unknown format {format!r}")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if format == "csv":
        return parse_csv_text(text, source=str(path))
    return parse_libsvm_text(text, source=str(path))


def write_csv(dataset: Dataset, path, header: bool = True) -> None:
    """Serialize a dataset back to dense CSV (features then response)."""
    p = dataset.problem
    lines = []
    if header:
        cols = [f"x{j + 1}" for j in range(p.d)] + ["y"]
        lines.append(",".join(cols))
    for i in range(p.n):
        vals = [repr(float(v)) for v in p.X[i]] + [repr(float(p.y[i]))]
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")
