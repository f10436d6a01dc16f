"""Primal active-set solver for box-constrained convex QPs.

    minimize    0.5 x'Hx + g'x
    subject to  lower <= x <= upper
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

CONVERGED = "converged"
MAX_ITER = "max_iter"

_FREE, _LOWER, _UPPER = 0, 1, 2


@dataclass
class QPResult:
    x: np.ndarray
    multipliers: np.ndarray   # > 0: lower bound active, < 0: upper bound active
    kkt_residual: float
    iterations: int
    status: str
    objective: float

    def __iter__(self):
        return iter((self.x, self.multipliers, self.kkt_residual))


def objective(H, g, x):
    return 0.5 * x @ H @ x + g @ x


def kkt_residual(H, g, x, lower, upper):
    """Infinity norm of the projected-gradient (natural) residual."""
    grad = H @ x + g
    return float(np.max(np.abs(x - np.clip(x - grad, lower, upper)), initial=0.0))


def _solve_free(H, rhs, free):
    Hf = H[np.ix_(free, free)]
    try:
        return cho_solve(cho_factor(Hf, check_finite=False), rhs, check_finite=False)
    except (LinAlgError, ValueError):
        return np.linalg.lstsq(Hf, rhs, rcond=None)[0]


def qp_solve(H, g, lower, upper, warm_start=None, max_iter: int = 50, tol: float = 1e-10) -> QPResult:
    """Solve the box QP; never raises on iteration exhaustion.

    ``warm_start`` is an initial primal guess; it is projected onto the box and
    the bounds it touches seed the working set. The iterate is always feasible
    and the objective non-increasing, so the last iterate is the best one.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = g.size
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")

    x = np.zeros(n) if warm_start is None else np.array(warm_start, dtype=float)
    x = np.clip(x, lower, upper)
    fixed = lower == upper
    state = np.full(n, _FREE)
    state[x <= lower] = _LOWER
    state[x >= upper] = _UPPER
    x[state == _LOWER] = lower[state == _LOWER]
    x[state == _UPPER] = upper[state == _UPPER]

    status = MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        free = state == _FREE
        grad = H @ x + g
        p = np.zeros(n)
        if free.any():
            p[free] = _solve_free(H, -grad[free], free)
        scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
        if np.max(np.abs(p), initial=0.0) <= tol * scale:
            # stationary on the working set: check multiplier signs
            viol = np.zeros(n)
            at_lo = (state == _LOWER) & ~fixed
            at_hi = (state == _UPPER) & ~fixed
            viol[at_lo] = np.maximum(-grad[at_lo], 0.0)
            viol[at_hi] = np.maximum(grad[at_hi], 0.0)
            thresh = tol * max(1.0, float(np.max(np.abs(grad), initial=0.0)))
            if np.max(viol) <= thresh:
                status = CONVERGED
                break
            # release every bound whose multiplier has the wrong sign; the next
            # subspace step still decreases the objective and the ratio test keeps
            # the iterate feasible
            state[viol > thresh] = _FREE
            continue
        # ratio test against bounds of free variables
        alpha = 1.0
        block = -1
        idx = np.flatnonzero(free & (p < 0))
        if idx.size:
            r = (lower[idx] - x[idx]) / p[idx]
            k = int(np.argmin(r))
            if r[k] < alpha:
                alpha, block, side = r[k], idx[k], _LOWER
        idx = np.flatnonzero(free & (p > 0))
        if idx.size:
            r = (upper[idx] - x[idx]) / p[idx]
            k = int(np.argmin(r))
            if r[k] < alpha:
                alpha, block, side = r[k], idx[k], _UPPER
        x = x + max(alpha, 0.0) * p
        if block >= 0:
            state[block] = side
            x[block] = lower[block] if side == _LOWER else upper[block]
        x = np.clip(x, lower, upper)

    grad = H @ x + g
    mult = np.zeros(n)
    mult[state != _FREE] = grad[state != _FREE]
    return QPResult(x, mult, kkt_residual(H, g, x, lower, upper), it, status, float(objective(H, g, x)))
