"""Real-time iteration: one Gauss-Newton SQP step per control cycle.

Multiple shooting over the horizon nodes, condensed to a dense QP in the
stacked input increments and solved with the box active-set solver.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..quadmodel import NU, NX, QuadParams, _check_quaternion, _deriv, _jacobian, _model
from .cost import NY, NY_TERMINAL, Y_U, CostWeights
from .problem import OcpProblem
from .qp import CONVERGED, MAX_ITER, qp_solve

INFEASIBLE_GUARD = "infeasible_guard"

_DSIGN = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass
class OcpSolution:
    states: np.ndarray          # (N+1, 17)
    inputs: np.ndarray          # (N, 4)
    kkt_residual: float = np.inf
    qp_iterations: int = 0
    solve_time: float = 0.0
    status: str = CONVERGED
    qp_kkt: float = 0.0
    cost: float = np.nan

    @property
    def u0(self) -> np.ndarray:
        return self.inputs[0].copy()


@dataclass
class RtiOptions:
    qp_max_iter: int = 50
    active_snap: float = 0.05
    rk4_substeps: int = 1
    regularization: float = 1e-9


def linearize_dynamics(state, input, params: QuadParams):
    """Exact Jacobians (A, B) of the continuous dynamics at (state, input)."""
    x = np.asarray(state, dtype=float)
    _check_quaternion(x)
    A, B = _jacobian(x, _model(params))
    return A, B.copy()


_B = slice(0, 13)   # rigid-body part of the state
_T = slice(13, 17)  # rotor thrusts


def node_step(X, U, h, mdl, substeps=1):
    """Integrate a stack of nodes over one interval, without sensitivities.

    The motor lag is linear and decoupled, so the thrusts follow their exact
    exponential response; the rigid body is advanced with RK4 driven by the
    thrusts at the stage times.
    """
    hs = h / substeps
    e_half = np.exp(-0.5 * hs / mdl.params.motor_tau)
    e_full = e_half * e_half
    x = X
    for _ in range(substeps):
        t0 = x[..., _T]
        k1 = _deriv(x, U, mdl)[..., _B]
        x2 = x.copy()
        x2[..., _B] += 0.5 * hs * k1
        x2[..., _T] = U + (t0 - U) * e_half
        k2 = _deriv(x2, U, mdl)[..., _B]
        x3 = x2.copy()
        x3[..., _B] = x[..., _B] + 0.5 * hs * k2
        k3 = _deriv(x3, U, mdl)[..., _B]
        x4 = x.copy()
        x4[..., _B] += hs * k3
        x4[..., _T] = U + (t0 - U) * e_full
        k4 = _deriv(x4, U, mdl)[..., _B]
        x4[..., _B] = x[..., _B] + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x = x4
    return x


def shooting_step(X, U, h, mdl, substeps=1):
    """node_step for a stack of K nodes, with sensitivities.

    Returns (X_next, A_d, B_d) with A_d = dX_next/dX, B_d = dX_next/dU.
    """
    K = X.shape[0]
    nz = NX + NU
    hs = h / substeps
    e_half = np.exp(-0.5 * hs / mdl.params.motor_tau)
    e_full = e_half * e_half
    Su = np.zeros((NU, nz))
    Su[:, NX:] = np.eye(NU)
    # sensitivities of the current substep start w.r.t. (X, U) of the node
    S = np.zeros((K, NX, nz))
    S[:, :, :NX] = np.eye(NX)
    x = X
    for _ in range(substeps):
        t0 = x[:, _T]
        St = S[:, _T, :]
        # stage states, stage slopes and their sensitivities
        k1 = _deriv(x, U, mdl)
        A1, _ = _jacobian(x, mdl)
        dk1 = A1[:, _B, :] @ S

        x2 = x.copy()
        x2[:, _B] += 0.5 * hs * k1[:, _B]
        x2[:, _T] = U + (t0 - U) * e_half
        D2 = np.empty_like(S)
        D2[:, _B] = S[:, _B] + 0.5 * hs * dk1
        D2[:, _T] = e_half * St + (1.0 - e_half) * Su
        k2 = _deriv(x2, U, mdl)
        A2, _ = _jacobian(x2, mdl)
        dk2 = A2[:, _B, :] @ D2

        x3 = x2.copy()
        x3[:, _B] = x[:, _B] + 0.5 * hs * k2[:, _B]
        D3 = D2.copy()
        D3[:, _B] = S[:, _B] + 0.5 * hs * dk2
        k3 = _deriv(x3, U, mdl)
        A3, _ = _jacobian(x3, mdl)
        dk3 = A3[:, _B, :] @ D3

        x4 = x.copy()
        x4[:, _B] += hs * k3[:, _B]
        x4[:, _T] = U + (t0 - U) * e_full
        D4 = np.empty_like(S)
        D4[:, _B] = S[:, _B] + hs * dk3
        D4[:, _T] = e_full * St + (1.0 - e_full) * Su
        k4 = _deriv(x4, U, mdl)
        A4, _ = _jacobian(x4, mdl)
        dk4 = A4[:, _B, :] @ D4

        x4[:, _B] = x[:, _B] + (hs / 6.0) * (k1[:, _B] + 2.0 * k2[:, _B] + 2.0 * k3[:, _B] + k4[:, _B])
        D4[:, _B] = S[:, _B] + (hs / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4)
        x, S = x4, D4
    return x, S[:, :, :NX], S[:, :, NX:]


def _left_matrices(q):
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    return np.stack([
        np.stack([w, -x, -y, -z], -1),
        np.stack([x, w, -z, y], -1),
        np.stack([y, z, w, -x], -1),
        np.stack([z, -y, x, w], -1),
    ], axis=1)


def _state_residuals(S, ref_x, ref_q):
    """State part (16 rows) of the residual and its Jacobian, for a stack of nodes.

    The tilt rows use (e_x, e_y) of the error quaternion e = q_ref o q*; their
    squared norm equals that of the split's (q_xy_x, q_xy_y), so the cost is
    the same while the Jacobian stays regular at 180 degree tilt.
    """
    K = S.shape[0]
    L = _left_matrices(ref_q) * _DSIGN  # de/dq
    e = np.einsum("kij,kj->ki", L, S[:, 6:10])
    n2 = e[:, 0] ** 2 + e[:, 3] ** 2
    n = np.sqrt(n2 + 1e-12)
    r = np.empty((K, NY_TERMINAL))
    J = np.zeros((K, NY_TERMINAL, NX))
    r[:, 0:3] = S[:, 0:3] - ref_x[:, 0:3]
    r[:, 3:5] = e[:, 1:3]
    r[:, 5] = e[:, 3] / n
    r[:, 6:9] = S[:, 3:6] - ref_x[:, 3:6]
    r[:, 9:16] = S[:, 10:17] - ref_x[:, 10:17]
    idx = np.arange(3)
    J[:, idx, idx] = 1.0
    J[:, 3:5, 6:10] = L[:, 1:3, :]
    dyaw_de = np.zeros((K, 4))
    n3 = n ** 3
    dyaw_de[:, 0] = -e[:, 3] * e[:, 0] / n3
    dyaw_de[:, 3] = (e[:, 0] ** 2 + 1e-12) / n3
    J[:, 5, 6:10] = np.einsum("ki,kij->kj", dyaw_de, L)
    J[:, 6 + idx, 3 + idx] = 1.0
    idx7 = np.arange(7)
    J[:, 9 + idx7, 10 + idx7] = 1.0
    return r, J


def _stack_refs(refs):
    ref_x = np.array([r.state_vector() for r in refs])
    ref_u = np.array([r.u_ref for r in refs[:-1]])
    return ref_x, ref_u


def shift_solution(previous: OcpSolution, fraction: float = 1.0):
    """Warm start for the next cycle: trajectories advanced by ``fraction`` node intervals.

    ``fraction = 1`` is the classic one-node shift; fractional values
    interpolate linearly between nodes, the tail holding the last node.
    """
    S = previous.states
    U = previous.inputs
    N = U.shape[0]
    S_ext = np.vstack([S, S[-1:]])
    U_ext = np.vstack([U, U[-1:], U[-1:]])
    whole = int(np.floor(fraction))
    f = fraction - whole
    idx = np.minimum(np.arange(N + 1) + whole, N + 1)
    S_new = (1.0 - f) * S_ext[idx] + f * S_ext[np.minimum(idx + 1, N + 1)]
    idu = np.minimum(np.arange(N) + whole, N + 1)
    U_new = (1.0 - f) * U_ext[idu] + f * U_ext[np.minimum(idu + 1, N + 1)]
    S_new[:, 6:10] /= np.linalg.norm(S_new[:, 6:10], axis=1, keepdims=True)
    return S_new, U_new


def initial_guess(problem: OcpProblem, x0, substeps=1):
    """Forward simulation from x0 under the reference inputs (zero shooting gaps)."""
    mdl = _model(problem.params)
    N = problem.nodes_N
    _, ref_u = _stack_refs(problem.references)
    U = np.clip(ref_u, problem.input_lower, problem.input_upper)
    S = np.empty((N + 1, NX))
    S[0] = x0
    for k in range(N):
        S[k + 1] = node_step(S[k:k + 1], U[k:k + 1], problem.dt, mdl, substeps)[0]
    S[:, 6:10] /= np.linalg.norm(S[:, 6:10], axis=1, keepdims=True)
    return S, U


def solve_rti(problem: OcpProblem, x0, previous: Optional[OcpSolution] = None,
              shift: float = 1.0, options: Optional[RtiOptions] = None) -> OcpSolution:
    """One SQP iteration of the OCP, warm-started from ``previous`` shifted by ``shift`` nodes.

    Without ``previous`` the linearization point is a forward simulation from
    ``x0`` under the reference inputs.
    """
    t_start = time.perf_counter()
    opts = options or RtiOptions()
    if problem.references is None:
        raise ValueError("problem has no references")
    x0 = np.asarray(x0, dtype=float)
    N = problem.nodes_N
    nu = NU * N
    mdl = _model(problem.params)
    lb, ub = problem.input_lower, problem.input_upper

    if previous is None:
        S, U = initial_guess(problem, x0, opts.rk4_substeps)
    elif shift:
        S, U = shift_solution(previous, shift)
    else:
        S, U = previous.states.copy(), previous.inputs.copy()
    U = np.clip(U, lb, ub)

    F, Ad, Bd = shooting_step(S[:-1], U, problem.dt, mdl, opts.rk4_substeps)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(Ad)) and np.all(np.isfinite(Bd))):
        fallback = previous if previous is not None else OcpSolution(S, U)
        return OcpSolution(fallback.states, fallback.inputs, np.inf, 0,
                           time.perf_counter() - t_start, INFEASIBLE_GUARD)
    gaps = F - S[1:]

    ref_x, ref_u = _stack_refs(problem.references)
    r_s, J_s = _state_residuals(S, ref_x, ref_x[:, 6:10])
    Qr = problem.weights.running_diag()
    QN = problem.weights.terminal_diag()
    w_run = np.sqrt(Qr)
    w_term = np.sqrt(QN)

    # condensing: ds_k = E_k + Sx_k du
    E = np.empty((N + 1, NX))
    Sx = np.zeros((N + 1, NX, nu))
    E[0] = x0 - S[0]
    for k in range(N):
        E[k + 1] = Ad[k] @ E[k] + gaps[k]
        if k:
            Sx[k + 1, :, :NU * k] = Ad[k] @ Sx[k, :, :NU * k]
        Sx[k + 1, :, NU * k:NU * (k + 1)] = Bd[k]

    Wx = w_run[None, :NY_TERMINAL, None] * J_s[:N]
    M_run = np.zeros((N, NY, nu))
    M_run[:, :NY_TERMINAL, :] = Wx @ Sx[:N]
    wu = w_run[Y_U]
    for k in range(N):
        M_run[k, Y_U, NU * k:NU * (k + 1)] = np.diag(wu)
    r_run = np.empty((N, NY))
    r_run[:, :NY_TERMINAL] = w_run[:NY_TERMINAL] * (r_s[:N] + np.einsum("kij,kj->ki", J_s[:N], E[:N]))
    r_run[:, NY_TERMINAL:] = wu * (U - ref_u)
    M_term = (w_term[:, None] * J_s[N]) @ Sx[N]
    r_term = w_term * (r_s[N] + J_s[N] @ E[N])

    M = np.vstack([M_run.reshape(N * NY, nu), M_term])
    rr = np.concatenate([r_run.ravel(), r_term])
    H = M.T @ M
    H[np.diag_indices(nu)] += opts.regularization
    g = M.T @ rr

    lo = (lb - U).ravel()
    hi = (ub - U).ravel()
    nlp_kkt = max(float(np.max(np.abs(np.clip(-g, lo, hi)))),
                  float(np.max(np.abs(gaps))), float(np.max(np.abs(E[0]))))
    cost = float(np.sum(((w_run[:NY_TERMINAL] * r_s[:N]) ** 2)) + np.sum(r_run[:, NY_TERMINAL:] ** 2)
                 + np.sum((w_term * r_s[N]) ** 2))

    # inputs that the shift interpolated to just off a bound start on it, so the
    # previous cycle's active set carries over into the working set
    snap = opts.active_snap
    du0 = np.where(lo > -snap, lo, np.where(hi < snap, hi, 0.0))
    qp = qp_solve(H, g, lo, hi, warm_start=du0, max_iter=opts.qp_max_iter)
    du = qp.x
    U_new = np.clip(U + du.reshape(N, NU), lb, ub)
    S_new = S + E + Sx @ du
    S_new[0] = x0
    S_new[1:, 6:10] /= np.linalg.norm(S_new[1:, 6:10], axis=1, keepdims=True)
    if not (np.all(np.isfinite(S_new)) and np.all(np.isfinite(U_new))):
        fallback = previous if previous is not None else OcpSolution(S, U)
        return OcpSolution(fallback.states, fallback.inputs, np.inf, qp.iterations,
                           time.perf_counter() - t_start, INFEASIBLE_GUARD)
    return OcpSolution(S_new, U_new, nlp_kkt, qp.iterations, time.perf_counter() - t_start,
                       qp.status, qp.kkt_residual, cost)
