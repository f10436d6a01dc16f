"""Stateful receding-horizon wrapper around solve_rti."""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..quadmodel import FaultStatus
from .problem import OcpProblem, update_fault_mode
from .reference import build_reference
from .rti import INFEASIBLE_GUARD, OcpSolution, RtiOptions, solve_rti


class NmpcController:
    """Owns the warm start of one control loop; not meant to be shared between loops."""

    def __init__(self, problem: OcpProblem, control_dt: float, clamp_limit: Optional[float] = 2.0,
                 options: Optional[RtiOptions] = None, warmup_iterations: int = 10):
        self.problem = problem
        self.control_dt = control_dt
        self.clamp_limit = clamp_limit
        self.options = options or RtiOptions()
        self.warmup_iterations = warmup_iterations
        self.solution: Optional[OcpSolution] = None
        self.guard_trips = 0

    def set_fault(self, fault: Optional[FaultStatus]):
        self.problem = update_fault_mode(self.problem, fault)

    def reset(self):
        self.solution = None

    def command(self, x, t: float, source) -> OcpSolution:
        """Solve for the measured state ``x`` at time ``t`` tracking ``source``."""
        x = np.asarray(x, dtype=float)
        refs = build_reference(source, t, self.problem, self.clamp_limit, x[0:3])
        self.problem = self.problem.with_references(refs)
        if self.solution is None:
            sol = solve_rti(self.problem, x, None, options=self.options)
            for _ in range(self.warmup_iterations):
                sol = solve_rti(self.problem, x, sol, shift=0.0, options=self.options)
        else:
            sol = solve_rti(self.problem, x, self.solution,
                            shift=self.control_dt / self.problem.dt, options=self.options)
        if sol.status == INFEASIBLE_GUARD:
            self.guard_trips += 1
        self.solution = sol
        return sol
