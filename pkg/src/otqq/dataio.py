"""CSV ingestion and the delimited/JSON writers used by result bundles."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ParseError, RaggedRows
from .model import PointCloud


def _looks_numeric(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_csv(path, has_header: bool | None = None, delimiter: str = ",") -> PointCloud:
    """Read a rectangular numeric CSV into a point cloud.

    ``has_header=None`` auto-detects a header from the first row; column names
    are kept when a header is present.  Raises :class:`ParseError` with the
    1-based line/column of the first bad cell, or :class:`RaggedRows` when a
    row width differs from the first row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        raw = [row for row in reader if row]
    if not raw:
        raise ParseError(1, 1, "file is empty")
    first = raw[0]
    if has_header is None:
        has_header = not all(_looks_numeric(c.strip()) for c in first)
    names = tuple(c.strip() for c in first) if has_header else None
    body = raw[1:] if has_header else raw
    if not body:
        raise ParseError(2 if has_header else 1, 1, "no data rows")
    width = len(body[0])
    rows = np.empty((len(body), width))
    offset = 2 if has_header else 1
    for r, row in enumerate(body):
        if len(row) != width:
            raise RaggedRows(r + offset)
        for c, cell in enumerate(row):
            try:
                rows[r, c] = float(cell.strip())
            except ValueError:
                raise ParseError(r + offset, c + 1, f"not a number: {cell.strip()!r}") from None
    return PointCloud(rows, names=names)


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips the double exactly."""
    return repr(float(value))


def write_pairs_csv(path, pairs: np.ndarray) -> None:
    path = Path(path)
    lines = ["x,y"]
    for x, y in pairs:
        lines.append(f"{format_float(x)},{format_float(y)}")
    path.write_text("\n".join(lines) + "\n")


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()
