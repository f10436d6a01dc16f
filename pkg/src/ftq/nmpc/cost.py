"""Weights, references and the least-squares tracking cost."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .. import quat
from ..quadmodel import FaultStatus, QuadParams

# residual layout: p(3) tilt(2) yaw(1) v(3) omega(3) t(4) u(4)
NY = 20
NY_TERMINAL = 16
Y_P, Y_TILT, Y_YAW, Y_V, Y_W, Y_T, Y_U = (
    slice(0, 3), slice(3, 5), slice(5, 6), slice(6, 9), slice(9, 12), slice(12, 16), slice(16, 20))


def _vec(value, n):
    return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()


@dataclass(frozen=True)
class CostWeights:
    Q_p: np.ndarray = field(default_factory=lambda: np.full(3, 100.0))
    Q_xy: float = 50.0
    Q_z: float = 5.0
    Q_v: np.ndarray = field(default_factory=lambda: np.full(3, 5.0))
    Q_omega: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 0.1]))
    Q_t: np.ndarray = field(default_factory=lambda: np.full(4, 0.01))
    Q_u: np.ndarray = field(default_factory=lambda: np.full(4, 0.01))
    Q_p_N: np.ndarray = field(default_factory=lambda: np.full(3, 200.0))
    Q_xy_N: float = 100.0
    Q_z_N: float = 10.0
    Q_v_N: np.ndarray = field(default_factory=lambda: np.full(3, 10.0))
    Q_omega_N: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 0.2]))
    Q_t_N: np.ndarray = field(default_factory=lambda: np.full(4, 0.02))

    def __post_init__(self):
        for name, n in (("Q_p", 3), ("Q_v", 3), ("Q_omega", 3), ("Q_t", 4), ("Q_u", 4),
                        ("Q_p_N", 3), ("Q_v_N", 3), ("Q_omega_N", 3), ("Q_t_N", 4)):
            object.__setattr__(self, name, _vec(getattr(self, name), n))
        for name in ("Q_xy", "Q_z", "Q_xy_N", "Q_z_N"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if np.any(self.running_diag() < 0) or np.any(self.terminal_diag() < 0):
            raise ValueError("weights must be non-negative")

    @classmethod
    def from_running(cls, terminal_factor=2.0, **running) -> "CostWeights":
        """Weights whose terminal entries are ``terminal_factor`` times the running ones."""
        w = cls(**running)
        f = terminal_factor
        return replace(w, Q_p_N=f * w.Q_p, Q_xy_N=f * w.Q_xy, Q_z_N=f * w.Q_z,
                       Q_v_N=f * w.Q_v, Q_omega_N=f * w.Q_omega, Q_t_N=f * w.Q_t)

    def running_diag(self) -> np.ndarray:
        return np.concatenate([self.Q_p, [self.Q_xy, self.Q_xy, self.Q_z], self.Q_v,
                               self.Q_omega, self.Q_t, self.Q_u])

    def terminal_diag(self) -> np.ndarray:
        return np.concatenate([self.Q_p_N, [self.Q_xy_N, self.Q_xy_N, self.Q_z_N], self.Q_v_N,
                               self.Q_omega_N, self.Q_t_N])

    def relaxed(self, zero_yaw_rate: bool = False) -> "CostWeights":
        """Fault-mode weights: the yaw attitude is no longer penalized.

        With ``zero_yaw_rate`` the yaw-rate weight is dropped as well.
        """
        if not zero_yaw_rate:
            return replace(self, Q_z=0.0, Q_z_N=0.0)
        wz = self.Q_omega.copy()
        wz[2] = 0.0
        wzN = self.Q_omega_N.copy()
        wzN[2] = 0.0
        return replace(self, Q_z=0.0, Q_z_N=0.0, Q_omega=wz, Q_omega_N=wzN)

    def scaled(self, factor: float) -> "CostWeights":
        kw = {}
        for name in self.__dataclass_fields__:
            kw[name] = getattr(self, name) * factor
        return CostWeights(**kw)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            out[name] = val.tolist() if isinstance(val, np.ndarray) else val
        return out


@dataclass
class ReferencePoint:
    p_ref: np.ndarray
    v_ref: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_ref: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())
    omega_ref: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_ref: np.ndarray = field(default_factory=lambda: np.zeros(4))
    u_ref: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.p_ref = np.asarray(self.p_ref, dtype=float)
        self.v_ref = np.asarray(self.v_ref, dtype=float)
        self.q_ref = np.asarray(self.q_ref, dtype=float)
        self.omega_ref = np.asarray(self.omega_ref, dtype=float)
        self.t_ref = np.asarray(self.t_ref, dtype=float)
        self.u_ref = np.asarray(self.u_ref, dtype=float)

    def state_vector(self) -> np.ndarray:
        return np.concatenate([self.p_ref, self.v_ref, self.q_ref, self.omega_ref, self.t_ref])


def hover_thrusts(params: QuadParams, fault: FaultStatus | None = None) -> np.ndarray:
    """Static force-balance thrust split over the healthy rotors (torques ignored)."""
    t = np.full(4, params.hover_thrust)
    if fault is not None and fault.failed_rotor is not None:
        t = np.full(4, params.mass * params.gravity / 3.0)
        t[fault.index] = 0.0
    return t


class AttitudeSplit(NamedTuple):
    q_e: np.ndarray
    q_z: np.ndarray
    q_xy: np.ndarray


def attitude_error_split(q, q_ref, tol: float = 1e-6) -> AttitudeSplit:
    """Split the attitude error q_ref o q^-1 into a yaw part and a tilt part.

    ``q_e = q_z o q_xy`` where q_z rotates about z only and q_xy about an
    axis in the xy-plane.
    """
    q = np.asarray(q, dtype=float)
    q_ref = np.asarray(q_ref, dtype=float)
    for name, val in (("q", q), ("q_ref", q_ref)):
        if abs(np.linalg.norm(val) - 1.0) > tol:
            raise ValueError(f"{name} is not a unit quaternion")
    q_e = quat.multiply(q_ref, quat.conjugate(q))
    n = np.hypot(q_e[0], q_e[3])
    if n < 1e-12:
        q_z = quat.IDENTITY.copy()
        q_xy = q_e.copy()
    else:
        q_z = np.array([q_e[0] / n, 0.0, 0.0, q_e[3] / n])
        q_xy = quat.multiply(quat.conjugate(q_z), q_e)
        q_xy[3] = 0.0
    return AttitudeSplit(q_e, q_z, q_xy)


def stage_residual(state, input, ref: ReferencePoint, weights: CostWeights, terminal: bool = False):
    """Residual vector y and cost y^T Q y for one node.

    The terminal variant drops the input block.
    """
    x = np.asarray(state, dtype=float)
    split = attitude_error_split(x[6:10], ref.q_ref)
    y = np.concatenate([
        x[0:3] - ref.p_ref,
        split.q_xy[1:3],
        split.q_z[3:4],
        x[3:6] - ref.v_ref,
        x[10:13] - ref.omega_ref,
        x[13:17] - ref.t_ref,
    ])
    if terminal:
        Q = weights.terminal_diag()
    else:
        y = np.concatenate([y, np.asarray(input, dtype=float) - ref.u_ref])
        Q = weights.running_diag()
    return y, float(y @ (Q * y))
