"""CSV/JSON emission with a reproducibility manifest beside each file."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

BENCH_COLUMNS = ("model", "grouping", "scheme", "order", "q", "N_t", "h", "delta", "eff_exp",
                 "region_flag")


def fmt(value) -> str:
    """Locale-independent text with 17 significant digits for floats."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else fmt(v)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def to_csv(rows: list[dict], columns=None) -> str:
    columns = list(columns or (rows[0].keys() if rows else BENCH_COLUMNS))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def write_table(rows: list[dict], path, fmt_name: str = "csv", columns=None) -> Path:
    """Write ``rows`` as CSV or JSON to ``path`` (suffix added if missing)."""
    path = Path(path)
    if fmt_name == "csv":
        path = path.with_suffix(".csv")
        path.write_text(to_csv(rows, columns), encoding="utf-8")
    elif fmt_name == "json":
        path = path.with_suffix(".json")
        cols = list(columns or (rows[0].keys() if rows else BENCH_COLUMNS))
        data = [{c: _jsonable(r.get(c)) for c in cols} for r in rows]
        path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt_name!r}")
    return path


def write_manifest(path, subcommand: str, config: dict, seeds: dict, outputs,
                   started: float, counters: dict | None = None) -> Path:
    from .. import __version__

    manifest = {
        "subcommand": subcommand,
        "config": _jsonable(config),
        "seeds": _jsonable(seeds),
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "outputs": [str(p) for p in outputs],
        "wall_clock_s": time.time() - started,
        "counters": _jsonable(counters or {}),
    }
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
