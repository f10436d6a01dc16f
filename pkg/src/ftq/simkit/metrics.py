"""Recovery and tracking metrics from a trajectory log."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .. import quat
from .config import RecoveryCriterion


@dataclass
class Metrics:
    max_alt_drop: float
    max_xy_offset: float
    recovery_time: Optional[float]
    success: bool
    rms_tracking_error: float
    mean_solver_latency: float

    def to_dict(self) -> dict:
        return asdict(self)


def _fault_index(time, fault_time):
    idx = np.flatnonzero(time >= fault_time - 1e-9)
    if idx.size == 0:
        raise ValueError(f"log ends at {time[-1] if len(time) else None} before the fault at {fault_time}")
    return int(idx[0])


def recovery_time(time, tilt, xy_err, fault_time, criterion: RecoveryCriterion = RecoveryCriterion()):
    """Seconds after the fault at which the recovery condition starts to hold for ``hold_s``.

    None if the condition never holds for the full window inside the log.
    """
    ok = (tilt < np.radians(criterion.tilt_deg)) & (xy_err < criterion.xy_error)
    i0 = _fault_index(time, fault_time)
    start = None
    for i in range(i0, len(time)):
        if ok[i]:
            if start is None:
                start = i
            if time[i] - time[start] >= criterion.hold_s - 1e-9:
                return float(time[start] - fault_time)
        else:
            start = None
    return None


def compute_metrics(log, config, criterion: Optional[RecoveryCriterion] = None,
                    eval_start: Optional[float] = None) -> Metrics:
    """Metrics of the post-fault part of ``log``.

    ``eval_start`` (default: the fault time) starts the RMS tracking window.
    """
    criterion = criterion or config.recovery
    if len(log) == 0:
        raise ValueError("empty log")
    fault_time = config.fault.fault_time if config.fault.failed_rotor is not None else 0.0
    t = log.time
    i0 = _fault_index(t, fault_time)
    p = log.states[:, 0:3]
    post = slice(i0, None)
    drop = float(np.max(p[i0, 2] - p[post, 2]))
    xy_err = np.linalg.norm(p[:, 0:2] - log.ref_p[:, 0:2], axis=1)
    max_xy = float(np.max(xy_err[post]))
    tilt = quat.tilt(log.states[:, 6:10])
    rec = None if log.diverged else recovery_time(t, tilt, xy_err, fault_time, criterion)
    if eval_start is None:
        eval_start = fault_time
    win = t >= eval_start - 1e-9
    rms = float(np.sqrt(np.mean(xy_err[win] ** 2))) if win.any() else 0.0
    return Metrics(
        max_alt_drop=max(drop, 0.0),
        max_xy_offset=max_xy,
        recovery_time=rec,
        success=rec is not None and not log.diverged,
        rms_tracking_error=rms,
        mean_solver_latency=float(np.mean(log.solve_ms)) * 1e-3,
    )


def steady_state_planar_error(log, setpoint=None, window: float = 2.0) -> float:
    """Mean planar distance over the last ``window`` seconds.

    Measured against ``setpoint`` (xy or xyz) when given, otherwise against
    the logged reference.
    """
    if len(log) == 0:
        raise ValueError("empty log")
    sel = log.time >= log.time[-1] - window + 1e-9
    target = log.ref_p[sel, 0:2] if setpoint is None else np.asarray(setpoint, dtype=float)[0:2]
    return float(np.mean(np.linalg.norm(log.states[sel, 0:2] - target, axis=-1)))
