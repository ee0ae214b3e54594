"""Deterministic CSV/JSON writers (comment header block, repr floats)."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def csv_text(columns: list[str], rows, comments: list[str] | None = None) -> str:
    buf = io.StringIO()
    for c in comments or []:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path: Path, columns, rows, comments=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows, comments))
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(obj))
    return path


def trajectory_rows(traj, time_scale: float = 1.0):
    return [
        (t * time_scale, m, s, traj.realization_count)
        for t, m, s in zip(traj.times, traj.f_R_mean, traj.f_R_stderr)
    ]


TRAJECTORY_COLUMNS = ["tau", "f_R_mean", "f_R_stderr", "realization_count"]


def gnuplot_stub(data_file: str, xcol: int, ycol: int, logscale: bool = False, title: str = "") -> str:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
    ]
    if logscale:
        lines.append("set logscale xy")
    if title:
        lines.append(f"set title '{title}'")
    lines.append(f"plot '{data_file}' using {xcol}:{ycol} with linespoints")
    return "\n".join(lines) + "\n"
