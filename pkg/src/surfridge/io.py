"""Reading and writing point clouds and JSON records."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .geometry import check_points


class DataFormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def format_float(value):
    return format(float(value), ".17g")


def points_to_csv(points, header=False):
    points = check_points(points, allow_empty=True)
    buf = io.StringIO()
    if header:
        buf.write(",".join(f"x{j}" for j in range(points.shape[1])) + "\n")
    for row in points:
        buf.write(",".join(format_float(v) for v in row) + "\n")
    return buf.getvalue()


def write_points_csv(path, points, header=False):
    with open(path, "w", newline="") as fh:
        fh.write(points_to_csv(points, header=header))


def parse_points_csv(text):
    """Parse CSV text into an ``(n, D)`` array.

    An optional first row ``x0,...,x{D-1}`` is accepted as header. Blank
    lines are skipped; NaN and infinities are rejected.
    """
    rows = []
    dim = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if lineno == 1 and cells == [f"x{j}" for j in range(len(cells))]:
            dim = len(cells)
            continue
        if dim is None:
            dim = len(cells)
        elif len(cells) != dim:
            raise DataFormatError(
                f"expected {dim} columns, found {len(cells)}", lineno)
        try:
            values = [float(cell) for cell in cells]
        except ValueError:
            raise DataFormatError(f"non-numeric value in {row!r}", lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError("NaN or infinite value", lineno)
        rows.append(values)
    if dim is None:
        raise DataFormatError("no data rows")
    return np.asarray(rows, dtype=float).reshape(-1, dim)


def read_points_csv(path):
    with open(path, newline="") as fh:
        return parse_points_csv(fh.read())


def parse_points_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(exc.msg, exc.lineno) from None
    if not isinstance(data, list) or not data:
        raise DataFormatError("expected a non-empty array of arrays")
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise DataFormatError("ragged or non-numeric array") from None
    try:
        return check_points(arr)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def points_to_json(points):
    points = check_points(points, allow_empty=True)
    return json.dumps(points.tolist())


def read_points(path):
    """Read a point cloud from ``.json`` or CSV (any other suffix)."""
    with open(path, newline="") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return parse_points_json(text)
    return parse_points_csv(text)


def to_jsonable(obj):
    """Recursively convert numpy values; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
