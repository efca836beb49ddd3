"""CSV/JSON readers and writers.

Numbers are written with 12 significant digits. Files are written to a
temporary sibling and renamed into place, so a failed run never leaves a
partial output behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import EmptySample, NonPositivePrice, ParseError, TooShort
from .npdensity import DensityCurve, DensitySurface
from .series import Grid, PriceSeries, SamplePairs

PRICE_HEADER = ["timestamp", "price"]
PAIR_HEADER = ["x", "y"]


def fmt(value) -> str:
    return format(float(value), ".12g")


def fmt_time(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else fmt(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(fmt(v))
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_table(path, expected_header) -> list[tuple[int, list[str]]]:
    try:
        with open(path, newline="") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", location=str(path)) from exc
    if not lines:
        raise ParseError(f"{path} is empty", location=f"{path}:1")
    header = [h.strip().lower() for h in lines[0]]
    if header != expected_header:
        raise ParseError(f"expected header {','.join(expected_header)!r}, got {','.join(lines[0])!r}",
                         location=f"{path}:1")
    rows = []
    for lineno, row in enumerate(lines[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected_header):
            raise ParseError(f"expected {len(expected_header)} fields, got {len(row)}",
                             location=f"{path}:{lineno}")
        rows.append((lineno, [c.strip() for c in row]))
    return rows


def read_header(path) -> list[str]:
    try:
        with open(path, newline="") as fh:
            first = next(csv.reader(fh), [])
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", location=str(path)) from exc
    return [h.strip().lower() for h in first]


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", location=where) from None
    if not math.isfinite(value):
        raise ParseError(f"not a finite number: {text!r}", location=where)
    return value


def _parse_timestamp(text: str, where: str) -> float:
    try:
        return float(int(text))
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00")).timestamp()
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"timestamp is neither an integer nor ISO 8601: {text!r}", location=where) from None
    if not math.isfinite(value):
        raise ParseError(f"timestamp is not finite: {text!r}", location=where)
    return value


def ingest_prices(path, dt: float | None = None) -> PriceSeries:
    """Read a ``timestamp,price`` CSV; ``dt`` defaults to the median spacing."""
    rows = _read_table(path, PRICE_HEADER)
    ts, px = [], []
    for lineno, (t_text, p_text) in rows:
        where = f"{path}:{lineno}"
        t = _parse_timestamp(t_text, where)
        p = _parse_float(p_text, where)
        if p <= 0:
            raise NonPositivePrice(f"price {p_text} is not positive", location=where)
        if ts and t <= ts[-1]:
            raise ParseError("timestamps must be strictly increasing", location=where)
        ts.append(t)
        px.append(p)
    if len(px) < 2:
        raise TooShort(f"{path} holds {len(px)} price rows; need at least 2", location=str(path))
    if dt is None:
        dt = float(np.median(np.diff(ts)))
    return PriceSeries(np.array(ts), np.array(px), dt)


def emit_prices(series: PriceSeries) -> str:
    return write_rows(PRICE_HEADER, ((fmt_time(t), fmt(p)) for t, p in zip(series.timestamps, series.prices)))


def ingest_pairs(path) -> SamplePairs:
    rows = _read_table(path, PAIR_HEADER)
    xs = np.empty(len(rows))
    ys = np.empty(len(rows))
    for i, (lineno, (x_text, y_text)) in enumerate(rows):
        where = f"{path}:{lineno}"
        xs[i] = _parse_float(x_text, where)
        ys[i] = _parse_float(y_text, where)
    if len(rows) < 2:
        raise EmptySample(f"{path} holds {len(rows)} sample rows; need at least 2", location=str(path))
    return SamplePairs(xs, ys)


def emit_pairs(samples: SamplePairs) -> str:
    return write_rows(PAIR_HEADER, ((fmt(x), fmt(y)) for x, y in zip(samples.xs, samples.ys)))


def ingest_targets(path) -> tuple[np.ndarray, np.ndarray]:
    """Read an ``x,y,density`` CSV of explicit regression targets."""
    rows = _read_table(path, ["x", "y", "density"])
    pts = np.empty((len(rows), 2))
    vals = np.empty(len(rows))
    for i, (lineno, cells) in enumerate(rows):
        where = f"{path}:{lineno}"
        pts[i, 0] = _parse_float(cells[0], where)
        pts[i, 1] = _parse_float(cells[1], where)
        vals[i] = _parse_float(cells[2], where)
    return pts, vals


VOL_HEADERS = (["t", "v"], ["t", "v", "v_annualized_display"])


def ingest_vols(path) -> np.ndarray:
    """Read the CSV written by the ``vol`` subcommand (display column ignored)."""
    header = read_header(path)
    rows = _read_table(path, header if header in VOL_HEADERS else VOL_HEADERS[0])
    return np.array([_parse_float(cells[1], f"{path}:{lineno}") for lineno, cells in rows])


def density_csv(density) -> str:
    if isinstance(density, DensityCurve):
        return write_rows(["x", "density"], ((fmt(x), fmt(v)) for x, v in zip(density.x, density.values)))
    g = density.grid
    xs, ys = g.x_knots, g.y_knots
    rows = ((fmt(xs[i]), fmt(ys[j]), fmt(density.values[i, j]))
            for i in range(g.nx) for j in range(g.ny))
    return write_rows(["x", "y", "density"], rows)


def density_dict(density) -> dict:
    return {"grid": density.grid.to_dict(), "values": density.values,
            "method": density.method, "diagnostics": density.diagnostics}


def density_from_dict(d: dict):
    grid = Grid(**d["grid"])
    cls = DensityCurve if grid.ndim == 1 else DensitySurface
    return cls(grid, np.array(d["values"], dtype=float), d["method"], d.get("diagnostics", {}))
