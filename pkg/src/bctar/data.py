"""CSV ingestion, preprocessing transforms and series output."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InputError

TRANSFORMS = ("none", "diff", "logdiff")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest(path: str | Path, column: str | int | None = None) -> np.ndarray:
    """Read one numeric column of a comma-separated file.

    ``column`` is a 0-based index or a header name; by default the last
    column is used. A header row is recognised when the selected cell of the
    first row is not a number. Errors report 1-based file line numbers.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [(reader_line, row) for reader_line, row in _rows(fh) if any(c.strip() for c in row)]
    if not rows:
        raise InputError(f"{path} contains no data")

    first_line, first = rows[0]
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        header = [c.strip() for c in first]
        if column not in header:
            raise InputError(f"column {column!r} not found in header {header}")
        idx = header.index(column)
        body = rows[1:]
    else:
        idx = -1 if column is None else int(column)
        try:
            cell = first[idx]
        except IndexError:
            raise InputError(f"line {first_line}: no column {idx}") from None
        body = rows[1:] if not _is_number(cell.strip()) else rows

    values = []
    for line, row in body:
        try:
            cell = row[idx].strip()
        except IndexError:
            raise InputError(f"line {line}: no column {idx}") from None
        try:
            v = float(cell)
        except ValueError:
            raise InputError(f"line {line}: non-numeric value {cell!r}") from None
        if not math.isfinite(v):
            raise InputError(f"line {line}: non-finite value {cell!r}")
        values.append(v)
    if not values:
        raise InputError(f"{path}: selected column is empty")
    return np.array(values)


def _rows(fh):
    reader = csv.reader(fh)
    for row in reader:
        yield reader.line_num, row


def transform(series: Sequence[float], kind: str) -> np.ndarray:
    x = np.asarray(series, dtype=float).reshape(-1)
    if kind == "none":
        return x.copy()
    if kind == "diff":
        return np.diff(x)
    if kind == "logdiff":
        bad = np.flatnonzero(x <= 0)
        if bad.size:
            raise InputError(f"row {bad[0] + 1}: logdiff needs positive values, got {x[bad[0]]!r}")
        return np.diff(np.log(x))
    raise ConfigurationError(f"unknown transform {kind!r}; expected one of {TRANSFORMS}")


def invert_forecasts(levels: np.ndarray, forecasts: np.ndarray, start: int, kind: str) -> np.ndarray:
    """Map one-step forecasts of transformed values back to levels.

    ``forecasts[j]`` predicts transformed sample ``start + j``, which links
    level ``start + j`` to level ``start + j + 1``.
    """
    prev = np.asarray(levels, dtype=float)[start : start + len(forecasts)]
    if kind == "diff":
        return prev + forecasts
    if kind == "logdiff":
        return prev * np.exp(forecasts)
    if kind == "none":
        return np.asarray(forecasts, dtype=float).copy()
    raise ConfigurationError(f"unknown transform {kind!r}")


def write_series(path: str | Path, series: Sequence[float], header: str | None = "value") -> None:
    """Write one value per line with 17 significant digits, which round-trips float64 exactly."""
    with Path(path).open("w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        for v in series:
            fh.write(f"{float(v):.17g}\n")


def read_matrix(path: str | Path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [[float(c) for c in row] for row in csv.reader(fh) if row]
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    return np.array(rows)
