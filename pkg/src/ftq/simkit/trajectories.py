"""Analytic reference trajectories with level attitude."""
import numpy as np

from ..nmpc.cost import ReferencePoint


def lemniscate_reference(t: float, omega: float, altitude: float) -> ReferencePoint:
    """Figure-eight x = 4 sin(wt), y = 2 sin(2wt) at constant altitude."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    return ReferencePoint(
        p_ref=np.array([4.0 * np.sin(omega * t), 2.0 * np.sin(2.0 * omega * t), altitude]),
        v_ref=np.array([4.0 * omega * np.cos(omega * t), 4.0 * omega * np.cos(2.0 * omega * t), 0.0]),
    )


def lemniscate_max_speed(omega: float, samples: int = 200001) -> float:
    """Peak reference speed over one period, by dense sampling."""
    t = np.linspace(0.0, 2 * np.pi / omega, samples)
    vx = 4.0 * omega * np.cos(omega * t)
    vy = 4.0 * omega * np.cos(2.0 * omega * t)
    return float(np.max(np.hypot(vx, vy)))


def circle_reference(t: float, radius: float, speed: float, altitude: float,
                     center=(0.0, 0.0)) -> ReferencePoint:
    """Counter-clockwise circle starting at (center_x + radius, center_y)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if speed < 0:
        raise ValueError("speed must be non-negative")
    w = speed / radius
    c, s = np.cos(w * t), np.sin(w * t)
    return ReferencePoint(
        p_ref=np.array([center[0] + radius * c, center[1] + radius * s, altitude]),
        v_ref=np.array([-speed * s, speed * c, 0.0]),
    )


def forward_reference(t: float, speed: float, altitude: float = 0.0, heading=(1.0, 0.0)) -> ReferencePoint:
    """Straight line from the origin at constant ``speed`` along ``heading``."""
    if speed < 0:
        raise ValueError("speed must be non-negative")
    d = np.asarray(heading, dtype=float)
    d = d / np.linalg.norm(d)
    return ReferencePoint(
        p_ref=np.array([d[0] * speed * t, d[1] * speed * t, altitude]),
        v_ref=np.array([d[0] * speed, d[1] * speed, 0.0]),
    )
