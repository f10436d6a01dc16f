"""Scenario description."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..nmpc.cost import CostWeights
from ..quadmodel import FaultStatus, QuadParams

KINDS = ("hover_fail", "random_attitude", "lemniscate", "inverted_recovery",
         "circle_fail", "forward_flight_fail")
RECOVERY_KINDS = ("hover_fail", "random_attitude", "inverted_recovery",
                  "circle_fail", "forward_flight_fail")


@dataclass(frozen=True)
class MismatchConfig:
    """Plant-side deviations from the controller's nominal model."""

    mass_error: float = 0.0
    cog_offset: tuple = (0.0, 0.0)
    kappa_error: float = 0.0
    external_torque: tuple = (0.0, 0.0, 0.0)
    thrust_noise_std: float = 0.0

    def plant_params(self, nominal: QuadParams) -> QuadParams:
        return nominal.perturbed(self.mass_error, self.cog_offset, self.kappa_error)


@dataclass(frozen=True)
class RecoveryCriterion:
    tilt_deg: float = 25.0
    xy_error: float = 0.3
    hold_s: float = 0.5


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "hover_fail"
    duration: float = 8.0
    fault: FaultStatus = FaultStatus(1, 3.0)
    seed: int = 0
    controller_rate_hz: float = 150.0
    sim_rate_hz: float = 1200.0
    mismatch: MismatchConfig = MismatchConfig()
    altitude: float = 5.0
    omega: float = 0.3535
    traj_start: float = 3.0
    radius: float = 6.0
    speed: float = 5.0
    flip_rate: float = 0.0
    initial_q: Optional[tuple] = None
    initial_p: Optional[tuple] = None
    initial_v: Optional[tuple] = None
    initial_omega: Optional[tuple] = None
    use_indi: bool = False
    indi_cutoff_hz: float = 12.0
    quad: QuadParams = field(default_factory=QuadParams)
    weights: CostWeights = field(default_factory=CostWeights)
    horizon_T: float = 1.0
    nodes_N: int = 20
    clamp_limit: float = 2.0
    qp_max_iter: int = 50
    rk4_substeps: int = 1
    warmup_iterations: int = 10
    zero_yaw_rate_weight: bool = False
    recovery: RecoveryCriterion = RecoveryCriterion()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        ratio = self.sim_rate_hz / self.controller_rate_hz
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("sim rate must be an integer multiple of the controller rate")
        if self.fault.failed_rotor is not None and not self.duration > self.fault.fault_time:
            raise ValueError("duration must exceed the fault time")

    @property
    def substeps(self) -> int:
        return int(round(self.sim_rate_hz / self.controller_rate_hz))

    @property
    def control_dt(self) -> float:
        return 1.0 / self.controller_rate_hz

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


_KIND_DEFAULTS = {
    "hover_fail": dict(duration=8.0, fault=FaultStatus(1, 3.0)),
    "random_attitude": dict(duration=3.5, fault=FaultStatus(1, 0.0)),
    "lemniscate": dict(fault=FaultStatus(1, 1.0), traj_start=3.0),
    "inverted_recovery": dict(duration=4.0, fault=FaultStatus(1, 0.0)),
    "circle_fail": dict(duration=9.0, fault=FaultStatus(1, 3.0), speed=7.5, radius=6.0),
    "forward_flight_fail": dict(duration=8.0, fault=FaultStatus(1, 2.0), speed=5.0),
}


def scenario(kind: str, **overrides) -> ScenarioConfig:
    """ScenarioConfig with the per-kind defaults, then ``overrides``."""
    if kind not in KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}")
    kw = dict(_KIND_DEFAULTS[kind])
    kw.update(overrides)
    if kind == "lemniscate" and "duration" not in overrides:
        kw["duration"] = kw["traj_start"] + 2 * np.pi / kw.get("omega", ScenarioConfig.omega)
    return ScenarioConfig(kind=kind, **kw)
