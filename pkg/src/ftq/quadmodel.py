"""Rigid-body quadrotor model with first-order rotor thrust lag.

State vector layout (17 entries)::

    p[0:3]  v[3:6]  q[6:10]  omega[10:13]  t[13:17]

Rotor thrusts are in newtons; the collective is divided by the mass when
computing the translational acceleration.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import quat

NX = 17
NU = 4
P, V, Q, W, T = slice(0, 3), slice(3, 6), slice(6, 10), slice(10, 13), slice(13, 17)

QUAT_TOL = 1e-6


class InvalidStateError(ValueError):
    pass


def _default_rotor_pos():
    d = 0.088
    # rotors 1/2 and 3/4 are diagonal pairs sharing a spin direction
    return np.array([[d, -d], [-d, d], [-d, -d], [d, d]])


@dataclass(frozen=True)
class QuadParams:
    mass: float = 0.75
    inertia_diag: np.ndarray = field(default_factory=lambda: np.array([2.5e-3, 2.5e-3, 4.3e-3]))
    rotor_pos: np.ndarray = field(default_factory=_default_rotor_pos)
    kappa_t: float = 0.012
    thrust_min: float = 0.0
    thrust_max: float = 8.5
    motor_tau: float = 0.033
    gravity: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "inertia_diag", np.asarray(self.inertia_diag, dtype=float).reshape(3))
        object.__setattr__(self, "rotor_pos", np.asarray(self.rotor_pos, dtype=float).reshape(4, 2))
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if np.any(self.inertia_diag <= 0):
            raise ValueError("inertia entries must be positive")
        if self.motor_tau <= 0:
            raise ValueError("motor_tau must be positive")
        if not (self.thrust_min == 0.0 and self.thrust_max >= self.thrust_min):
            raise ValueError("thrust bounds must satisfy 0 = thrust_min <= thrust_max")
        if np.allclose(self.rotor_pos, 0.0):
            raise ValueError("rotor positions produce no roll/pitch authority")

    @property
    def hover_thrust(self) -> float:
        """Per-rotor thrust for nominal hover."""
        return self.mass * self.gravity / 4.0

    def perturbed(self, mass_error=0.0, cog_offset=(0.0, 0.0), kappa_error=0.0) -> "QuadParams":
        """Copy with relative mass/kappa errors and a shifted centre of gravity.

        Moving the CoG by ``cog_offset`` moves every rotor by ``-cog_offset``
        relative to it.
        """
        return replace(
            self,
            mass=self.mass * (1.0 + mass_error),
            rotor_pos=self.rotor_pos - np.asarray(cog_offset, dtype=float),
            kappa_t=self.kappa_t * (1.0 + kappa_error),
        )

    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "inertia_diag": self.inertia_diag.tolist(),
            "rotor_pos": self.rotor_pos.tolist(),
            "kappa_t": self.kappa_t,
            "thrust_min": self.thrust_min,
            "thrust_max": self.thrust_max,
            "motor_tau": self.motor_tau,
            "gravity": self.gravity,
        }


@dataclass
class State:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.q, self.omega, self.t]).astype(float)

    def __array__(self, dtype=None, copy=None):
        x = self.as_vector()
        return x if dtype is None else x.astype(dtype)

    @classmethod
    def from_vector(cls, x) -> "State":
        x = np.asarray(x, dtype=float)
        return cls(x[P].copy(), x[V].copy(), x[Q].copy(), x[W].copy(), x[T].copy())

    @classmethod
    def hover(cls, params: QuadParams, position=(0.0, 0.0, 0.0)) -> "State":
        return cls(p=np.asarray(position, dtype=float), t=np.full(4, params.hover_thrust))


@dataclass
class Input:
    u: np.ndarray

    def __array__(self, dtype=None, copy=None):
        u = np.asarray(self.u, dtype=float)
        return u if dtype is None else u.astype(dtype)


@dataclass(frozen=True)
class FaultStatus:
    """Mock fault detector output: rotor ``failed_rotor`` (1-based) dead from ``fault_time`` on."""

    failed_rotor: Optional[int] = None
    fault_time: float = 0.0

    def __post_init__(self):
        if self.failed_rotor is not None and self.failed_rotor not in (1, 2, 3, 4):
            raise ValueError(f"invalid rotor index {self.failed_rotor!r}")

    def active(self, time: float) -> bool:
        return self.failed_rotor is not None and time >= self.fault_time

    @property
    def index(self) -> Optional[int]:
        """Zero-based column of the failed rotor, or None."""
        return None if self.failed_rotor is None else self.failed_rotor - 1


NO_FAULT = FaultStatus()


def effectiveness_matrix(params: QuadParams) -> np.ndarray:
    """Map from rotor thrusts to (collective thrust, body torques)."""
    r = params.rotor_pos
    k = params.kappa_t
    return np.array([
        np.ones(4),
        r[:, 1],
        -r[:, 0],
        [-k, -k, k, k],
    ])


class _Model:
    """Constants of QuadParams in the form the vectorized kernels need."""

    def __init__(self, params: QuadParams):
        self.params = params
        self.m = params.mass
        self.g = params.gravity
        self.J = params.inertia_diag.copy()
        self.Jinv = 1.0 / self.J
        self.G = effectiveness_matrix(params)
        self.Gtau = self.G[1:]
        self.inv_sigma = 1.0 / params.motor_tau
        J = self.J
        self.gyro = (2.0 * (J[1] - J[2]) / J[0], 2.0 * (J[2] - J[0]) / J[1], 2.0 * (J[0] - J[1]) / J[2])
        self.torque_map = self.Gtau * self.Jinv[:, None]
        self.lag = -self.inv_sigma * np.eye(4)
        self.B = np.zeros((NX, NU))
        self.B[13:17, :] = self.inv_sigma * np.eye(4)


_model_cache: dict = {}


def _model(params: QuadParams) -> _Model:
    key = id(params)
    cached = _model_cache.get(key)
    if cached is None or cached.params is not params:
        if len(_model_cache) > 64:
            _model_cache.clear()
        cached = _model_cache[key] = _Model(params)
    return cached


def _deriv(x, u, mdl: _Model):
    """Continuous dynamics, broadcasting over leading axes. No validation."""
    qw, qx, qy, qz = x[..., 6], x[..., 7], x[..., 8], x[..., 9]
    wx, wy, wz = x[..., 10], x[..., 11], x[..., 12]
    t = x[..., 13:17]
    J = mdl.J
    dx = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (NX,)))
    dx[..., 0:3] = x[..., 3:6]
    acc = np.sum(t, axis=-1) / mdl.m
    dx[..., 3] = acc * 2.0 * (qx * qz + qw * qy)
    dx[..., 4] = acc * 2.0 * (qy * qz - qw * qx)
    dx[..., 5] = acc * (1.0 - 2.0 * (qx * qx + qy * qy)) - mdl.g
    dx[..., 6] = 0.5 * (-qx * wx - qy * wy - qz * wz)
    dx[..., 7] = 0.5 * (qw * wx + qy * wz - qz * wy)
    dx[..., 8] = 0.5 * (qw * wy - qx * wz + qz * wx)
    dx[..., 9] = 0.5 * (qw * wz + qx * wy - qy * wx)
    tau = t @ mdl.Gtau.T
    dx[..., 10] = (tau[..., 0] - (wy * wz * (J[2] - J[1]))) * mdl.Jinv[0]
    dx[..., 11] = (tau[..., 1] - (wz * wx * (J[0] - J[2]))) * mdl.Jinv[1]
    dx[..., 12] = (tau[..., 2] - (wx * wy * (J[1] - J[0]))) * mdl.Jinv[2]
    dx[..., 13:17] = (u - t) * mdl.inv_sigma
    return dx


def _jacobian(x, mdl: _Model):
    """Jacobians (A, B) of _deriv; B is state independent."""
    batch = x.shape[:-1]
    qw, qx, qy, qz = x[..., 6], x[..., 7], x[..., 8], x[..., 9]
    wx, wy, wz = 0.5 * x[..., 10], 0.5 * x[..., 11], 0.5 * x[..., 12]
    A = np.zeros(batch + (NX, NX))
    A[..., 0, 3] = A[..., 1, 4] = A[..., 2, 5] = 1.0

    a2 = (2.0 / mdl.m) * np.sum(x[..., 13:17], axis=-1)
    # d(v_dot)/dq
    A[..., 3, 6] = a2 * qy
    A[..., 3, 7] = a2 * qz
    A[..., 3, 8] = a2 * qw
    A[..., 3, 9] = a2 * qx
    A[..., 4, 6] = -a2 * qx
    A[..., 4, 7] = -a2 * qw
    A[..., 4, 8] = a2 * qz
    A[..., 4, 9] = a2 * qy
    A[..., 5, 7] = -2.0 * a2 * qx
    A[..., 5, 8] = -2.0 * a2 * qy
    # d(v_dot)/dt: body z axis over mass, same for every rotor
    im = 1.0 / mdl.m
    A[..., 3, 13:17] = (im * 2.0 * (qx * qz + qw * qy))[..., None]
    A[..., 4, 13:17] = (im * 2.0 * (qy * qz - qw * qx))[..., None]
    A[..., 5, 13:17] = (im * (1.0 - 2.0 * (qx * qx + qy * qy)))[..., None]

    # d(q_dot)/dq = 0.5 * R((0, omega))
    A[..., 6, 7] = -wx
    A[..., 6, 8] = -wy
    A[..., 6, 9] = -wz
    A[..., 7, 6] = wx
    A[..., 7, 8] = wz
    A[..., 7, 9] = -wy
    A[..., 8, 6] = wy
    A[..., 8, 7] = -wz
    A[..., 8, 9] = wx
    A[..., 9, 6] = wz
    A[..., 9, 7] = wy
    A[..., 9, 8] = -wx
    # d(q_dot)/domega = 0.5 * L(q)[:, 1:]
    hw, hx, hy, hz = 0.5 * qw, 0.5 * qx, 0.5 * qy, 0.5 * qz
    A[..., 6, 10] = -hx
    A[..., 6, 11] = -hy
    A[..., 6, 12] = -hz
    A[..., 7, 10] = hw
    A[..., 7, 11] = -hz
    A[..., 7, 12] = hy
    A[..., 8, 10] = hz
    A[..., 8, 11] = hw
    A[..., 8, 12] = -hx
    A[..., 9, 10] = -hy
    A[..., 9, 11] = hx
    A[..., 9, 12] = hw

    # d(omega_dot)/domega (wx, wy, wz hold half rates here)
    c0, c1, c2 = mdl.gyro
    A[..., 10, 11] = c0 * wz
    A[..., 10, 12] = c0 * wy
    A[..., 11, 10] = c1 * wz
    A[..., 11, 12] = c1 * wx
    A[..., 12, 10] = c2 * wy
    A[..., 12, 11] = c2 * wx
    A[..., 10:13, 13:17] = mdl.torque_map
    A[..., 13:17, 13:17] = mdl.lag
    return A, mdl.B


def _check_quaternion(x, tol=QUAT_TOL):
    n = np.linalg.norm(x[..., 6:10], axis=-1)
    if np.any(~np.isfinite(n)) or np.any(np.abs(n - 1.0) > tol):
        raise InvalidStateError(f"quaternion norm {n} deviates from 1 beyond {tol}")


def quad_dynamics(state, input, params: QuadParams) -> np.ndarray:
    """Time derivative of the 17-dim state under commanded thrusts ``input``."""
    x = np.asarray(state, dtype=float)
    u = np.asarray(input, dtype=float)
    _check_quaternion(x)
    return _deriv(x, u, _model(params))


def _rk4(x, u, h, mdl):
    k1 = _deriv(x, u, mdl)
    k2 = _deriv(x + 0.5 * h * k1, u, mdl)
    k3 = _deriv(x + 0.5 * h * k2, u, mdl)
    k4 = _deriv(x + h * k3, u, mdl)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _renormalize(x):
    q = x[..., 6:10]
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    flip = q[..., 0] < 0.0
    if np.ndim(flip) == 0:
        if flip:
            q *= -1.0
    else:
        q[flip] *= -1.0
    return x


def integrate_rk4(state, input, params: QuadParams, dt: float):
    """One classical RK4 step of ``dt`` seconds followed by quaternion renormalization.

    Returns the same type as ``state`` (State or array).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    x = np.asarray(state, dtype=float)
    u = np.asarray(input, dtype=float)
    xn = _renormalize(_rk4(x, u, dt, _model(params)))
    return State.from_vector(xn) if isinstance(state, State) else xn


def apply_fault_bounds(lower, upper, fault: FaultStatus):
    """Zero the thrust bounds of the failed rotor; other entries untouched."""
    lo = np.array(lower, dtype=float)
    hi = np.array(upper, dtype=float)
    if fault is not None and fault.failed_rotor is not None:
        lo[fault.index] = 0.0
        hi[fault.index] = 0.0
    return lo, hi


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unit_quaternions(n: int, rng_seed=None) -> np.ndarray:
    """``n`` rotations uniform on SO(3) from three uniform variates each (subgroup method)."""
    rng = _rng(rng_seed)
    u1, u2, u3 = rng.random((3, n))
    a = np.sqrt(1.0 - u1)
    b = np.sqrt(u1)
    q = np.stack([a * np.sin(2 * np.pi * u2), a * np.cos(2 * np.pi * u2),
                  b * np.sin(2 * np.pi * u3), b * np.cos(2 * np.pi * u3)], axis=-1)
    return quat.canonical(q)


def random_unit_quaternion(rng_seed=None) -> np.ndarray:
    return random_unit_quaternions(1, rng_seed)[0]


def _deriv_scalar(x, u, c):
    """Scalar-float twin of _deriv for the high-rate plant loop."""
    m, g, Jx, Jy, Jz, G, isg, dx, dy, dz = c
    qw, qx, qy, qz = x[6], x[7], x[8], x[9]
    wx, wy, wz = x[10], x[11], x[12]
    t1, t2, t3, t4 = x[13], x[14], x[15], x[16]
    acc = (t1 + t2 + t3 + t4) / m
    tx = G[1][0] * t1 + G[1][1] * t2 + G[1][2] * t3 + G[1][3] * t4 + dx
    ty = G[2][0] * t1 + G[2][1] * t2 + G[2][2] * t3 + G[2][3] * t4 + dy
    tz = G[3][0] * t1 + G[3][1] * t2 + G[3][2] * t3 + G[3][3] * t4 + dz
    return [
        x[3], x[4], x[5],
        acc * 2.0 * (qx * qz + qw * qy),
        acc * 2.0 * (qy * qz - qw * qx),
        acc * (1.0 - 2.0 * (qx * qx + qy * qy)) - g,
        0.5 * (-qx * wx - qy * wy - qz * wz),
        0.5 * (qw * wx + qy * wz - qz * wy),
        0.5 * (qw * wy - qx * wz + qz * wx),
        0.5 * (qw * wz + qx * wy - qy * wx),
        (tx - wy * wz * (Jz - Jy)) / Jx,
        (ty - wz * wx * (Jx - Jz)) / Jy,
        (tz - wx * wy * (Jy - Jx)) / Jz,
        (u[0] - t1) * isg, (u[1] - t2) * isg, (u[2] - t3) * isg, (u[3] - t4) * isg,
    ]


def propagate(state, input, params: QuadParams, dt: float, steps: int = 1,
              ext_torque=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``steps`` RK4 steps of ``dt`` under a held command, renormalizing after each.

    Numerically identical in structure to repeated integrate_rk4 calls but
    evaluated on Python floats, which is much faster for a single state.
    ``ext_torque`` is a constant body-frame disturbance torque.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    J = params.inertia_diag
    c = (params.mass, params.gravity, float(J[0]), float(J[1]), float(J[2]),
         effectiveness_matrix(params).tolist(), 1.0 / params.motor_tau,
         *(float(v) for v in ext_torque))
    x = [float(v) for v in np.asarray(state, dtype=float)]
    u = [float(v) for v in np.asarray(input, dtype=float)]
    h2, h6 = 0.5 * dt, dt / 6.0
    r = range(NX)
    for _ in range(steps):
        k1 = _deriv_scalar(x, u, c)
        k2 = _deriv_scalar([x[i] + h2 * k1[i] for i in r], u, c)
        k3 = _deriv_scalar([x[i] + h2 * k2[i] for i in r], u, c)
        k4 = _deriv_scalar([x[i] + dt * k3[i] for i in r], u, c)
        x = [x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in r]
        n = (x[6] * x[6] + x[7] * x[7] + x[8] * x[8] + x[9] * x[9]) ** 0.5
        if x[6] < 0.0:
            n = -n
        x[6] /= n
        x[7] /= n
        x[8] /= n
        x[9] /= n
    return np.array(x)
