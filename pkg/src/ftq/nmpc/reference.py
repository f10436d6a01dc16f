"""Horizon references: hover points, sampled trajectories, position-error clamping."""
from __future__ import annotations

import numpy as np

from .. import quat
from .cost import ReferencePoint, hover_thrusts


class TrajectoryUndefinedError(ValueError):
    pass


class Trajectory:
    """Time-parametrized reference ``fn(t) -> ReferencePoint`` defined on [t_start, t_end]."""

    def __init__(self, fn, t_start: float = 0.0, t_end: float = np.inf):
        self.fn = fn
        self.t_start = t_start
        self.t_end = t_end

    def __call__(self, t: float) -> ReferencePoint:
        return self.fn(t)


def clamp_position_error(p_err, limit: float) -> np.ndarray:
    """Scale ``p_err`` down to Euclidean norm ``limit`` if it is longer."""
    if not limit > 0:
        raise ValueError("limit must be positive")
    p_err = np.asarray(p_err, dtype=float)
    n = np.linalg.norm(p_err)
    if n <= limit:
        return p_err.copy()
    return p_err * (limit / n)


def build_reference(source, t_k: float, problem, clamp_limit: float | None = None, position=None):
    """N+1 reference points for the horizon starting at ``t_k``.

    ``source`` is either a 3-vector hover position or a Trajectory. Thrust
    references are the static hover split over the rotors that are healthy
    under ``problem.fault``. With ``clamp_limit`` and the measured
    ``position`` the whole horizon is shifted so that the node-0 position
    error does not exceed the limit.
    """
    N = problem.nodes_N
    fault = problem.fault
    thrust = hover_thrusts(problem.params, fault if fault.failed_rotor is not None else None)
    if isinstance(source, Trajectory) or callable(source):
        traj = source if isinstance(source, Trajectory) else Trajectory(source)
        t_last = t_k + problem.horizon_T
        if t_k < traj.t_start - 1e-12 or t_last > traj.t_end + 1e-12:
            raise TrajectoryUndefinedError(
                f"trajectory defined on [{traj.t_start}, {traj.t_end}], horizon needs [{t_k}, {t_last}]")
        refs = []
        for j in range(N + 1):
            r = traj(t_k + j * problem.dt)
            refs.append(ReferencePoint(r.p_ref, r.v_ref, r.q_ref, r.omega_ref,
                                       thrust.copy(), thrust.copy()))
    else:
        p = np.asarray(source, dtype=float)
        if p.shape != (3,):
            raise TypeError("hover source must be a 3-vector")
        refs = [ReferencePoint(p.copy(), t_ref=thrust.copy(), u_ref=thrust.copy()) for _ in range(N + 1)]
    if clamp_limit is not None and position is not None:
        err = refs[0].p_ref - np.asarray(position, dtype=float)
        shift = clamp_position_error(err, clamp_limit) - err
        if np.any(shift != 0.0):
            for r in refs:
                r.p_ref = r.p_ref + shift
    return refs
