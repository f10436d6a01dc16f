"""CSV / JSON export of trajectory logs and metric summaries."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .simkit.log import TrajectoryLog

CSV_COLUMNS = (
    "time_s", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "q_w", "q_x", "q_y", "q_z",
    "omega_x", "omega_y", "omega_z", "t_1", "t_2", "t_3", "t_4", "u_1", "u_2", "u_3", "u_4",
    "ref_px", "ref_py", "ref_pz", "kkt", "solve_ms", "fault_active",
)


class ExportError(OSError):
    pass


def _fmt(v) -> str:
    return repr(float(v))


def export_csv(log: TrajectoryLog, path, record_latency: bool = True) -> Path:
    """One row per controller step in the fixed column order; header always written.

    With ``record_latency`` off the wall-clock ``solve_ms`` column is written
    as ``nan`` so that the file is reproducible byte for byte.
    """
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for i in range(len(log)):
                row = [_fmt(log.time[i])]
                row += [_fmt(v) for v in log.states[i]]
                row += [_fmt(v) for v in log.inputs[i]]
                row += [_fmt(v) for v in log.ref_p[i]]
                row.append(_fmt(log.kkt[i]))
                row.append(_fmt(log.solve_ms[i]) if record_latency else "nan")
                row.append("1" if log.fault_active[i] else "0")
                w.writerow(row)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> TrajectoryLog:
    """Parse a file written by export_csv back into a TrajectoryLog."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header in {path}")
    if not body:
        return TrajectoryLog()
    a = np.array([[float(v) for v in r] for r in body])
    return TrajectoryLog(
        time=a[:, 0], states=a[:, 1:18], inputs=a[:, 18:22], ref_p=a[:, 22:25],
        kkt=a[:, 25], solve_ms=a[:, 26], fault_active=a[:, 27] > 0.5,
        qp_iterations=np.zeros(len(a), dtype=int), u_nmpc=a[:, 18:22].copy(),
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(data, path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path
