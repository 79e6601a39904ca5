"""CSV serialization. Floats use 17 significant digits so files round-trip exactly."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from bdg.diagnostics import TimeSeries

SERIES_HEADER = ("t", "norm_scaled", "abs_psi", "re_psi", "im_psi", "delta_f")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def _meta_lines(meta: Mapping) -> list:
    lines = []
    for key in sorted(meta):
        value = meta[key]
        if value is None:
            value = "none"
        text = fmt(value).replace("\n", " ")
        lines.append(f"# {key}={text}\n")
    return lines


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], meta: Mapping = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.writelines(_meta_lines(dict(meta)))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_series(path, series: TimeSeries, meta: Mapping = ()) -> Path:
    merged = dict(series.metadata)
    merged.update(meta)
    psi = series.psi
    rows = zip(series.t, series.norm_scaled, np.abs(psi), psi.real, psi.imag, series.delta_f)
    return write_table(path, SERIES_HEADER, rows, merged)


def read_table(path):
    """Return ``(meta, header, rows)``; ``rows`` is a float array of shape (n, len(header))."""
    meta, header, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(header or ()))
    return meta, header, data


def write_error(path, kind: str, exc: BaseException, meta: Mapping = ()) -> Path:
    """JSON error record written next to a partial CSV."""
    record = {"kind": kind, "error": type(exc).__name__, "message": str(exc)}
    for attr in ("mode", "t", "excess"):
        value = getattr(exc, attr, None)
        if value is not None:
            record[attr] = float(value) if attr != "mode" else int(value)
    record["config"] = {k: fmt(v) for k, v in dict(meta).items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path
