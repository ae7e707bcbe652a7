"""CSV schemas and deterministic serialization for the CLI.

Input curves arrive as wide CSV (first column t, one column per curve,
shared grid) or long CSV (curve_id,t,value) for per-curve grids.  All
floats are written with 17 significant digits so a write/read round trip is
lossless, and rows are emitted in a fixed order so identical runs produce
identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .variation import DiscreteCurve


class InputFormatError(Exception):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text, line):
    try:
        return float(text)
    except ValueError:
        raise InputFormatError(f"not a number: {text!r}", line) from None


def read_curves_csv(path):
    """Read curves from wide or long CSV.

    Returns (curve_ids, curves, rescale) where rescale is None or
    (offset, scale) recording an affine map applied to bring times into
    [0,1].
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputFormatError("empty file", 1) from None
        header = [h.strip() for h in header]
        if not header:
            raise InputFormatError("missing header", 1)
        rows = [(idx, row) for idx, row in enumerate(reader, start=2) if row and any(row)]

    if len(header) >= 3 and [h.lower() for h in header[:3]] == ["curve_id", "t", "value"]:
        return _curves_from_long(rows)
    if header[0].lower() == "t" and len(header) >= 2:
        return _curves_from_wide(header, rows)
    raise InputFormatError(
        "header must be 'curve_id,t,value' (long) or 't,<curve>,...' (wide)", 1
    )


def _rescale_times(all_t):
    lo = min(t for t, _ in all_t)
    hi = max(t for t, _ in all_t)
    if 0.0 <= lo and hi <= 1.0:
        return None
    if hi == lo:
        raise InputFormatError("cannot rescale a single time point")
    return (lo, hi - lo)


def _curves_from_wide(header, rows):
    ids = header[1:]
    if len(set(ids)) != len(ids):
        raise InputFormatError("duplicate curve columns", 1)
    t = []
    cols = [[] for _ in ids]
    for line, row in rows:
        if len(row) != len(header):
            raise InputFormatError(f"expected {len(header)} fields, got {len(row)}", line)
        t.append((_parse_float(row[0], line), line))
        for j, cell in enumerate(row[1:]):
            cols[j].append(_parse_float(cell, line))
    rescale = _rescale_times(t)
    grid = np.array([x for x, _ in t])
    if rescale is not None:
        grid = (grid - rescale[0]) / rescale[1]
    order = np.argsort(grid)
    grid = grid[order]
    if not (np.diff(grid) > 0).all():
        dup_pos = int(np.argmin(np.diff(grid) > 0))
        raise InputFormatError("duplicate time point", t[order[dup_pos + 1]][1])
    curves = []
    for j in range(len(ids)):
        vals = np.array(cols[j])[order]
        try:
            curves.append(DiscreteCurve(grid, vals))
        except ValueError as exc:
            raise InputFormatError(f"curve {ids[j]!r}: {exc}") from None
    return ids, curves, rescale


def _curves_from_long(rows):
    by_id = {}
    all_t = []
    for line, row in rows:
        if len(row) != 3:
            raise InputFormatError(f"expected 3 fields, got {len(row)}", line)
        cid = row[0].strip()
        t = _parse_float(row[1], line)
        v = _parse_float(row[2], line)
        by_id.setdefault(cid, []).append((t, v, line))
        all_t.append((t, line))
    rescale = _rescale_times(all_t)
    ids = list(by_id.keys())  # first-appearance order
    curves = []
    for cid in ids:
        pts = by_id[cid]
        t = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        if rescale is not None:
            t = (t - rescale[0]) / rescale[1]
        order = np.argsort(t)
        t, v = t[order], v[order]
        if (np.diff(t) <= 0).any():
            dup_pos = int(np.argmin(np.diff(t) > 0))
            raise InputFormatError(
                f"curve {cid!r}: duplicate time point", pts[order[dup_pos + 1]][2]
            )
        try:
            curves.append(DiscreteCurve(t, v))
        except ValueError as exc:
            raise InputFormatError(f"curve {cid!r}: {exc}") from None
    return ids, curves, rescale


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_wide_csv(path, ids, grid, value_columns):
    rows = [
        [fmt(t)] + [fmt(col[k]) for col in value_columns] for k, t in enumerate(grid)
    ]
    write_rows(path, ["t"] + list(ids), rows)


def write_long_csv(path, ids, curves):
    rows = []
    for cid, curve in zip(ids, curves):
        for t, v in zip(curve.grid, curve.values):
            rows.append([cid, fmt(t), fmt(v)])
    write_rows(path, ["curve_id", "t", "value"], rows)


def write_warps_csv(path, ids, warps, inverse_warps, grid):
    rows = []
    for cid, w, iw in zip(ids, warps, inverse_warps):
        wv = w(grid)
        iv = iw(grid)
        for k, t in enumerate(grid):
            rows.append([cid, fmt(t), fmt(wv[k]), fmt(iv[k])])
    write_rows(path, ["curve_id", "t", "warp_value", "inverse_warp_value"], rows)


def read_warps_csv(path):
    data = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["curve_id", "t", "warp_value", "inverse_warp_value"]:
            raise InputFormatError("bad warps.csv header", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            cid = row[0]
            data.setdefault(cid, []).append(
                (_parse_float(row[1], line), _parse_float(row[2], line), _parse_float(row[3], line))
            )
    out = {}
    for cid, pts in data.items():
        arr = np.array(sorted(pts))
        out[cid] = (arr[:, 0], arr[:, 1], arr[:, 2])
    return out


def write_mean_csv(path, mean_curve):
    rows = [[fmt(t), fmt(v)] for t, v in zip(mean_curve.grid, mean_curve.values)]
    write_rows(path, ["t", "value"], rows)


def read_mean_csv(path):
    grid, vals = [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            grid.append(_parse_float(row[0], line))
            vals.append(_parse_float(row[1], line))
    return np.array(grid), np.array(vals)


def write_eigen_csv(path, grid, eigenfunctions):
    m = eigenfunctions.shape[0]
    header = ["t"] + [f"phi_{j + 1}" for j in range(m)]
    rows = [
        [fmt(t)] + [fmt(eigenfunctions[j, k]) for j in range(m)]
        for k, t in enumerate(grid)
    ]
    write_rows(path, header, rows)


def write_scores_csv(path, ids, score_matrix):
    m = score_matrix.shape[1]
    header = ["curve_id"] + [f"score_{j + 1}" for j in range(m)]
    rows = [
        [cid] + [fmt(score_matrix[i, j]) for j in range(m)] for i, cid in enumerate(ids)
    ]
    write_rows(path, header, rows)


def write_template_csv(path, cdf):
    rows = [[fmt(t), fmt(v)] for t, v in zip(cdf.jump_locations, cdf.cum_values)]
    write_rows(path, ["jump_location", "cum_value"], rows)


def read_template_csv(path):
    from .variation import StepCdf

    locs, cums = [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["jump_location", "cum_value"]:
            raise InputFormatError("bad template.csv header", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            locs.append(_parse_float(row[0], line))
            cums.append(_parse_float(row[1], line))
    return StepCdf(np.array(locs), np.array(cums))


def write_report_json(path, report: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_report_json(path):
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)
