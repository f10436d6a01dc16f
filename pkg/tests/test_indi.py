import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftq.indi import (
    FilterState, allocation_inverse, estimate_torque, indi_allocate, lowpass_update,
    reduced_effectiveness,
)
from ftq.quadmodel import FaultStatus, QuadParams, State, effectiveness_matrix, propagate
from ftq.simkit import scenario, simulate

P = QuadParams()
G = effectiveness_matrix(P)


def _run_filter(signal, dt, cutoff=12.0):
    f = FilterState(cutoff_hz=cutoff)
    out = []
    for s in signal:
        f = lowpass_update(f, s, s, dt)
        out.append(f)
    return out


def test_first_sample_passes_through():
    f = lowpass_update(FilterState(), [1.0, 2.0, 3.0], [0.1, 0.2, 0.3], 1 / 150)
    np.testing.assert_array_equal(f.omega_f, [1, 2, 3])
    np.testing.assert_array_equal(f.tau_f, [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(f.omega_dot_f, 0.0)


def test_unit_dc_gain():
    out = _run_filter([np.zeros(3)] + [np.full(3, 2.5)] * 300, 1 / 150)
    np.testing.assert_allclose(out[-1].omega_f, 2.5, atol=1e-6)
    np.testing.assert_allclose(out[-1].tau_f, 2.5, atol=1e-6)


def test_step_response_one_time_constant():
    tau = 1 / (2 * np.pi * 12.0)
    dt = tau / 100
    out = _run_filter([np.zeros(3)] + [np.ones(3)] * 100, dt)
    assert out[-1].omega_f[0] == pytest.approx(0.632, rel=0.02)


def test_channels_synchronized():
    imp = [np.zeros(3), np.array([1.0, -2.0, 0.5])] + [np.zeros(3)] * 50
    f = FilterState()
    for s in imp:
        f = lowpass_update(f, s, s, 1 / 150)
        np.testing.assert_array_equal(f.omega_f, f.tau_f)


def test_derivative_is_backward_difference():
    dt = 1 / 150
    out = _run_filter([np.zeros(3), np.ones(3), np.ones(3) * 3], dt)
    for a, b in zip(out[:-1], out[1:]):
        np.testing.assert_allclose(b.omega_dot_f, (b.omega_f - a.omega_f) / dt)


def test_estimate_torque():
    np.testing.assert_allclose(estimate_torque(np.full(4, 2.0), P), 0.0, atol=1e-15)
    r = P.rotor_pos[2]
    np.testing.assert_allclose(estimate_torque([0, 0, 3.0, 0], P), [r[1] * 3, -r[0] * 3, P.kappa_t * 3])
    t = np.random.default_rng(0).uniform(0, 8, 4)
    np.testing.assert_allclose(estimate_torque(t, P), G[1:] @ t)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_consistency_gives_identity(seed):
    rng = np.random.default_rng(seed)
    t = rng.uniform(1, 7, 4)
    u = rng.uniform(1, 7, 4)
    omega = rng.normal(0, 3, 3)
    J = P.inertia_diag
    tau = G[1:] @ t
    f = FilterState(omega_f=omega, tau_f=tau, omega_f_prev=omega,
                    omega_dot_f=(tau - np.cross(omega, J * omega)) / J, initialized=True)
    np.testing.assert_allclose(indi_allocate(u, omega, f, P), u, atol=1e-9)


@pytest.mark.parametrize("rotor", [1, 2, 3, 4])
def test_failed_rotor_zero(rotor):
    fault = FaultStatus(rotor)
    Ginv = allocation_inverse(P, fault)
    assert np.all(Ginv[rotor - 1] == 0.0)
    rng = np.random.default_rng(rotor)
    for _ in range(50):
        omega = rng.normal(0, 10, 3)
        f = FilterState(omega_f=omega, tau_f=rng.normal(0, 0.1, 3), omega_f_prev=omega,
                        omega_dot_f=rng.normal(0, 20, 3), initialized=True)
        u = indi_allocate(rng.uniform(0, 8.5, 4), omega, f, P, fault)
        assert u[rotor - 1] == 0.0
        assert np.all(u >= 0) and np.all(u <= P.thrust_max)


@pytest.mark.parametrize("rotor", [1, 2, 3, 4])
def test_pseudoinverse_minimal_norm(rotor):
    fault = FaultStatus(rotor)
    Gr = reduced_effectiveness(P, fault)
    Ginv = allocation_inverse(P, fault)
    null = np.linalg.svd(Gr)[2][-1]  # rank 3: one-dimensional null space
    np.testing.assert_allclose(Gr @ null, 0, atol=1e-12)
    rng = np.random.default_rng(rotor)
    for _ in range(100):
        w = Gr @ rng.uniform(0, 8, 4)
        u = Ginv @ w
        np.testing.assert_allclose(Gr @ u, w, atol=1e-10)
        assert abs(u @ null) < 1e-10
        for z in rng.normal(0, 2, 10):
            assert np.linalg.norm(u) <= np.linalg.norm(u + z * null) + 1e-12


def test_nominal_inverse_is_exact():
    np.testing.assert_allclose(allocation_inverse(P) @ G, np.eye(4), atol=1e-12)


def test_singular_configuration_rejected():
    # rotors 1/2 and 3/4 on top of each other: G has two identical column pairs
    bad = QuadParams(rotor_pos=[[0.1, 0.1], [0.1, 0.1], [-0.1, -0.1], [-0.1, -0.1]])
    with pytest.raises(ValueError):
        allocation_inverse(bad)


def test_uninitialized_filter_rejected():
    with pytest.raises(ValueError):
        indi_allocate(np.ones(4), np.zeros(3), FilterState(), P)


def test_rejects_torque_disturbance_rate_error():
    """Hover command, constant roll disturbance torque: with INDI the body rate stays
    near zero, without it the disturbance spins the vehicle up."""
    dt, sub = 1 / 150, 8
    u_cmd = np.full(4, P.hover_thrust)
    dist = (0.02, 0.0, 0.0)

    def run(use_indi):
        x = State.hover(P, (0, 0, 5)).as_vector()
        f = FilterState()
        Ginv = allocation_inverse(P)
        for _ in range(150):
            f = lowpass_update(f, x[10:13], estimate_torque(x[13:17], P), dt)
            u = indi_allocate(u_cmd, x[10:13], f, P, None, Ginv) if use_indi else u_cmd
            x = propagate(x, u, P, dt / sub, sub, dist)
        return np.linalg.norm(x[10:13])

    assert run(True) < 0.1 * run(False)


def test_nominal_transparency_at_hover():
    cfg = scenario("hover_fail", duration=5.0, fault=FaultStatus(None))
    a = simulate(cfg)
    b = simulate(cfg.with_(use_indi=True))
    assert np.max(np.linalg.norm(a.states - b.states, axis=1)) < 1e-6
