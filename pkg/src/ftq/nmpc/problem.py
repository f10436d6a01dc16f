"""Optimal control problem container and online fault reconfiguration."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from ..quadmodel import NO_FAULT, FaultStatus, QuadParams, apply_fault_bounds
from .cost import CostWeights, ReferencePoint


@dataclass(frozen=True)
class OcpProblem:
    params: QuadParams
    weights: CostWeights = field(default_factory=CostWeights)
    horizon_T: float = 1.0
    nodes_N: int = 20
    references: Optional[List[ReferencePoint]] = None
    input_lower: Optional[np.ndarray] = None
    input_upper: Optional[np.ndarray] = None
    fault: FaultStatus = NO_FAULT
    zero_yaw_rate_weight: bool = False
    # nominal configuration, restored when the fault is cleared
    nominal_weights: Optional[CostWeights] = None
    nominal_lower: Optional[np.ndarray] = None
    nominal_upper: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.nodes_N < 2:
            raise ValueError("nodes_N must be at least 2")
        if not self.horizon_T > 0:
            raise ValueError("horizon_T must be positive")
        if self.input_lower is None:
            object.__setattr__(self, "input_lower", np.full(4, self.params.thrust_min))
        if self.input_upper is None:
            object.__setattr__(self, "input_upper", np.full(4, self.params.thrust_max))
        object.__setattr__(self, "input_lower", np.asarray(self.input_lower, dtype=float))
        object.__setattr__(self, "input_upper", np.asarray(self.input_upper, dtype=float))
        if np.any(self.input_lower > self.input_upper):
            raise ValueError("inconsistent input bounds")
        if self.references is not None and len(self.references) != self.nodes_N + 1:
            raise ValueError(f"expected {self.nodes_N + 1} references, got {len(self.references)}")
        if self.nominal_weights is None:
            object.__setattr__(self, "nominal_weights", self.weights)
            object.__setattr__(self, "nominal_lower", self.input_lower.copy())
            object.__setattr__(self, "nominal_upper", self.input_upper.copy())

    @property
    def dt(self) -> float:
        return self.horizon_T / self.nodes_N

    def with_references(self, references) -> "OcpProblem":
        return replace(self, references=list(references))


def update_fault_mode(problem: OcpProblem, fault: Optional[FaultStatus]) -> OcpProblem:
    """Switch the problem between nominal and rotor-failure configuration.

    Only parameters change: the failed rotor's input bounds collapse to zero
    and the yaw attitude weight is dropped (the yaw-rate weight too when
    ``problem.zero_yaw_rate_weight`` is set). Passing no fault (or
    a FaultStatus without a rotor) restores the nominal configuration.
    """
    if isinstance(fault, (int, np.integer)) and not isinstance(fault, bool):
        fault = FaultStatus(int(fault))
    if fault is not None and not isinstance(fault, FaultStatus):
        raise ValueError(f"invalid fault status {fault!r}")
    if fault is None or fault.failed_rotor is None:
        return replace(problem, weights=problem.nominal_weights,
                       input_lower=problem.nominal_lower.copy(),
                       input_upper=problem.nominal_upper.copy(), fault=NO_FAULT)
    lo, hi = apply_fault_bounds(problem.nominal_lower, problem.nominal_upper, fault)
    return replace(problem, weights=problem.nominal_weights.relaxed(problem.zero_yaw_rate_weight),
                   input_lower=lo, input_upper=hi, fault=fault)
