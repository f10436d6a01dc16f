"""Per-controller-step trajectory record."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrajectoryLog:
    time: np.ndarray = field(default_factory=lambda: np.zeros(0))
    states: np.ndarray = field(default_factory=lambda: np.zeros((0, 17)))
    inputs: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    ref_p: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    kkt: np.ndarray = field(default_factory=lambda: np.zeros(0))
    solve_ms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fault_active: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    qp_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    u_nmpc: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    diverged: bool = False
    guard_trips: int = 0

    def __len__(self):
        return len(self.time)


class LogBuilder:
    def __init__(self):
        self.rows = {k: [] for k in ("time", "states", "inputs", "ref_p", "kkt", "solve_ms",
                                     "fault_active", "qp_iterations", "u_nmpc")}

    def append(self, **row):
        for k, v in row.items():
            self.rows[k].append(v)

    def build(self, **extra) -> TrajectoryLog:
        r = self.rows
        if not r["time"]:
            return TrajectoryLog(**extra)
        return TrajectoryLog(
            time=np.array(r["time"], dtype=float),
            states=np.array(r["states"], dtype=float),
            inputs=np.array(r["inputs"], dtype=float),
            ref_p=np.array(r["ref_p"], dtype=float),
            kkt=np.array(r["kkt"], dtype=float),
            solve_ms=np.array(r["solve_ms"], dtype=float),
            fault_active=np.array(r["fault_active"], dtype=bool),
            qp_iterations=np.array(r["qp_iterations"], dtype=int),
            u_nmpc=np.array(r["u_nmpc"], dtype=float),
            **extra,
        )
