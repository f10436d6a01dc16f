"""Incremental nonlinear dynamic inversion on top of the NMPC thrust commands."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .quadmodel import FaultStatus, QuadParams, effectiveness_matrix


@dataclass(frozen=True)
class FilterState:
    """First-order low-pass shared by the body-rate and torque channels."""

    cutoff_hz: float = 12.0
    omega_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_f_prev: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_dot_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initialized: bool = False

    def alpha(self, dt: float) -> float:
        return 1.0 - np.exp(-2.0 * np.pi * self.cutoff_hz * dt)


def lowpass_update(filt: FilterState, omega_meas, tau_est, dt: float) -> FilterState:
    """Advance both channels by one sample; derivative by backward difference."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    omega_meas = np.asarray(omega_meas, dtype=float)
    tau_est = np.asarray(tau_est, dtype=float)
    if not filt.initialized:
        return replace(filt, omega_f=omega_meas.copy(), tau_f=tau_est.copy(),
                       omega_f_prev=omega_meas.copy(), omega_dot_f=np.zeros(3), initialized=True)
    a = filt.alpha(dt)
    omega_f = filt.omega_f + a * (omega_meas - filt.omega_f)
    tau_f = filt.tau_f + a * (tau_est - filt.tau_f)
    return replace(filt, omega_f=omega_f, tau_f=tau_f, omega_f_prev=filt.omega_f,
                   omega_dot_f=(omega_f - filt.omega_f) / dt)


def estimate_torque(t_measured, params: QuadParams) -> np.ndarray:
    """Body torque produced by the measured rotor thrusts."""
    return effectiveness_matrix(params)[1:] @ np.asarray(t_measured, dtype=float)


def reduced_effectiveness(params: QuadParams, fault: FaultStatus | None = None) -> np.ndarray:
    G = effectiveness_matrix(params)
    if fault is not None and fault.failed_rotor is not None:
        G[:, fault.index] = 0.0
    return G


def allocation_inverse(params: QuadParams, fault: FaultStatus | None = None) -> np.ndarray:
    """Exact inverse of G when nominal, pseudoinverse of the reduced G under a fault."""
    if fault is None or fault.failed_rotor is None:
        G = effectiveness_matrix(params)
        if np.linalg.matrix_rank(G) < 4:
            raise ValueError("effectiveness matrix is singular for this rotor configuration")
        return np.linalg.inv(G)
    Ginv = np.linalg.pinv(reduced_effectiveness(params, fault))
    Ginv[fault.index, :] = 0.0
    return Ginv


def indi_allocate(u_nmpc, omega, filt: FilterState, params: QuadParams,
                  fault: FaultStatus | None = None, G_inv=None) -> np.ndarray:
    """Robustified per-rotor thrust command.

    The NMPC command is turned into desired collective thrust and angular
    acceleration; the torque is then rebuilt incrementally from the filtered
    torque estimate and filtered angular acceleration, and allocated back
    to the rotors.
    """
    if not filt.initialized:
        raise ValueError("filter not initialized")
    u_nmpc = np.asarray(u_nmpc, dtype=float)
    omega = np.asarray(omega, dtype=float)
    J = params.inertia_diag
    G = effectiveness_matrix(params)
    wrench = G @ u_nmpc
    gyro = np.cross(omega, J * omega)
    alpha_d = (wrench[1:] - gyro) / J
    tau_d = filt.tau_f + J * (alpha_d - filt.omega_dot_f)
    if G_inv is None:
        G_inv = allocation_inverse(params, fault)
    u = G_inv @ np.concatenate([[wrench[0]], tau_d])
    lo = np.full(4, params.thrust_min)
    hi = np.full(4, params.thrust_max)
    if fault is not None and fault.failed_rotor is not None:
        hi[fault.index] = 0.0
        lo[fault.index] = 0.0
    return np.clip(u, lo, hi)
