"""Closed-loop simulation: true plant at the simulation rate, NMPC (+ INDI) at the control rate."""
from __future__ import annotations

import numpy as np

from .. import quat
from ..indi import FilterState, allocation_inverse, estimate_torque, indi_allocate, lowpass_update
from ..nmpc.controller import NmpcController
from ..nmpc.cost import ReferencePoint
from ..nmpc.problem import OcpProblem
from ..nmpc.reference import Trajectory
from ..nmpc.rti import RtiOptions
from ..quadmodel import State, propagate, random_unit_quaternion
from .config import RECOVERY_KINDS, ScenarioConfig
from .log import LogBuilder, TrajectoryLog
from .metrics import Metrics, compute_metrics
from .trajectories import circle_reference, forward_reference, lemniscate_reference

DIVERGENCE_RADIUS = 1e3


def initial_state(config: ScenarioConfig) -> np.ndarray:
    prm = config.quad
    h = config.altitude
    st = State.hover(prm, (0.0, 0.0, h))
    kind = config.kind
    if kind == "random_attitude":
        st.q = random_unit_quaternion(config.seed)
    elif kind == "inverted_recovery":
        st.q = quat.from_axis_angle([1.0, 0.0, 0.0], np.pi)
        st.omega = np.array([config.flip_rate, 0.0, 0.0])
    elif kind == "circle_fail":
        r0 = circle_reference(0.0, config.radius, config.speed, h)
        st.p, st.v = r0.p_ref, r0.v_ref
    elif kind == "forward_flight_fail":
        r0 = forward_reference(0.0, config.speed, h)
        st.p, st.v = r0.p_ref, r0.v_ref
    for name, attr in (("initial_p", "p"), ("initial_v", "v"), ("initial_q", "q"), ("initial_omega", "omega")):
        val = getattr(config, name)
        if val is not None:
            setattr(st, attr, np.asarray(val, dtype=float))
    st.q = quat.canonical(st.q)
    return st.as_vector()


def nominal_source(config: ScenarioConfig, x0):
    """Reference before any switch: hover point or trajectory."""
    h = config.altitude
    kind = config.kind
    if kind == "lemniscate":
        start, w = config.traj_start, config.omega

        def lem(t):
            if t < start:
                return ReferencePoint(np.array([0.0, 0.0, h]))
            return lemniscate_reference(t - start, w, h)
        return Trajectory(lem)
    if kind == "circle_fail":
        return Trajectory(lambda t: circle_reference(t, config.radius, config.speed, h))
    if kind == "forward_flight_fail":
        return Trajectory(lambda t: forward_reference(t, config.speed, h))
    return np.array(x0[0:3], dtype=float)


def make_controller(config: ScenarioConfig) -> NmpcController:
    problem = OcpProblem(config.quad, config.weights, config.horizon_T, config.nodes_N,
                         zero_yaw_rate_weight=config.zero_yaw_rate_weight)
    opts = RtiOptions(qp_max_iter=config.qp_max_iter, rk4_substeps=config.rk4_substeps)
    return NmpcController(problem, config.control_dt, config.clamp_limit, opts, config.warmup_iterations)


def _source_position(source, t):
    if isinstance(source, Trajectory):
        return source(t).p_ref
    return source


def simulate(config: ScenarioConfig) -> TrajectoryLog:
    rng = np.random.default_rng(config.seed)
    plant = config.mismatch.plant_params(config.quad)
    ext_torque = tuple(config.mismatch.external_torque)
    noise = config.mismatch.thrust_noise_std
    ctrl = make_controller(config)
    fault = config.fault
    x = initial_state(config)
    source = nominal_source(config, x)
    switched = False
    filt = FilterState(cutoff_hz=config.indi_cutoff_hz)
    G_inv = allocation_inverse(config.quad)
    dt = config.control_dt
    h = 1.0 / config.sim_rate_hz
    steps = int(round(config.duration * config.controller_rate_hz))
    log = LogBuilder()
    diverged = False
    # With INDI the NMPC sees the thrusts its own commands would produce on the
    # nominal model; the measured thrusts carry INDI's disturbance correction,
    # which the NMPC would otherwise try to fight. Same RK4 lag step as the plant.
    z = h / config.quad.motor_tau
    lag = 1.0 - (1.0 - z + z * z / 2 - z ** 3 / 6 + z ** 4 / 24) ** config.substeps
    t_virtual = x[13:17].copy()

    for k in range(steps):
        t = k / config.controller_rate_hz
        active = fault.failed_rotor is not None and t >= fault.fault_time - 1e-9
        if active and not switched:
            switched = True
            ctrl.set_fault(fault)
            if config.use_indi:
                G_inv = allocation_inverse(config.quad, fault)
            if config.kind in RECOVERY_KINDS:
                source = x[0:3].copy()
        if config.use_indi:
            x_ctrl = x.copy()
            x_ctrl[13:17] = t_virtual
        else:
            x_ctrl = x
        sol = ctrl.command(x_ctrl, t, source)
        u_nmpc = sol.u0
        u = u_nmpc
        if config.use_indi:
            t_virtual = t_virtual + lag * (u_nmpc - t_virtual)
            t_meas = x[13:17] + (rng.normal(0.0, noise, 4) if noise > 0 else 0.0)
            filt = lowpass_update(filt, x[10:13], estimate_torque(t_meas, config.quad), dt)
            u = indi_allocate(u_nmpc, x[10:13], filt, config.quad, fault if active else None, G_inv)
        u_plant = u.copy()
        if active:
            u_plant[fault.index] = 0.0
        log.append(time=t, states=x.copy(), inputs=u_plant, ref_p=_source_position(source, t),
                   kkt=sol.kkt_residual, solve_ms=sol.solve_time * 1e3, fault_active=active,
                   qp_iterations=sol.qp_iterations, u_nmpc=u_nmpc)
        x = propagate(x, u_plant, plant, h, config.substeps, ext_torque)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x[0:3]) > DIVERGENCE_RADIUS:
            diverged = True
            break
    return log.build(diverged=diverged, guard_trips=ctrl.guard_trips)


def metrics_window_start(config: ScenarioConfig):
    if config.kind == "lemniscate":
        return max(config.traj_start, config.fault.fault_time)
    return None


def run_scenario(config: ScenarioConfig):
    """Simulate ``config`` and evaluate it; returns (TrajectoryLog, Metrics)."""
    log = simulate(config)
    if len(log) == 0:
        raise RuntimeError("scenario produced no samples")
    try:
        metrics = compute_metrics(log, config, eval_start=metrics_window_start(config))
    except ValueError:
        if not log.diverged:
            raise
        metrics = Metrics(np.inf, np.inf, None, False, np.inf, float(np.mean(log.solve_ms)) * 1e-3)
    return log, metrics
