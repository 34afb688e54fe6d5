"""Five-bar two-motor planar robot: inverse and forward kinematics.

Motor 1 sits at (0,0), motor 2 at (D,0); each arm is a proximal link L1
and distal link L2, both distal links meeting at the tool center point
(TCP). The inverse solve uses the law of cosines on both arms and fixes
the elbow-up assembly (TCP above the elbow chord). Forward kinematics
intersects the two distal-link circles and picks the upper intersection;
it is the independent oracle for the inverse solve, which must round-trip
through it to within 1e-9 mm.

`inverse_kinematics_printed` keeps a known-broken variant (second-arm
angle computed with the first arm's denominator, and the first motor
angle composed from the wrong arm's triangle) purely to demonstrate that
it fails the round-trip check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class UnreachableError(ValueError):
    """Target outside the usable workspace; `reason` names the failed check."""

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class RobotGeometry:
    d: float = 300.0  # motor separation, mm
    l1: float = 200.0  # proximal link, mm
    l2: float = 200.0  # distal link, mm

    def __post_init__(self):
        if self.d <= 0 or self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("D, L1, L2 must all be > 0")


@dataclass(frozen=True)
class JointAngles:
    xi: float  # motor 1 angle, degrees CCW from +X
    sigma: float  # motor 2 angle, degrees CCW from +X


@dataclass(frozen=True)
class IkDiagnostics:
    h1: float
    h2: float
    beta: float  # degrees
    gamma: float
    omega: float
    theta: float


def _clamped_acos(v: float) -> float:
    if v > 1.0:
        if v > 1.0 + 1e-12:
            raise ValueError(f"acos argument {v} out of range")
        v = 1.0
    elif v < -1.0:
        if v < -1.0 - 1e-12:
            raise ValueError(f"acos argument {v} out of range")
        v = -1.0
    return math.acos(v)


def _arm_distances(geom: RobotGeometry, target: tuple[float, float]):
    xi, yi = target
    h1 = math.hypot(xi, yi)
    h2 = math.hypot(geom.d - xi, yi)
    return h1, h2


def inverse_kinematics(
    geom: RobotGeometry, target: tuple[float, float], with_diagnostics: bool = False
):
    """Motor angles placing the TCP at `target` (mm), elbow-up assembly.

    Raises UnreachableError when either arm cannot span the target, when
    the target is not in the upper half-plane, or when the target lies in
    the lower assembly mode (below the elbow chord), where these motor
    angles would put the TCP elsewhere.
    """
    xi_t, yi_t = target
    if yi_t <= 0:
        raise UnreachableError(f"target y={yi_t} not in working half-plane", "half_plane")
    h1, h2 = _arm_distances(geom, target)
    lo, hi = abs(geom.l1 - geom.l2), geom.l1 + geom.l2
    if not lo <= h1 <= hi:
        raise UnreachableError(f"arm 1 cannot span h1={h1:.3f}", "arm1")
    if not lo <= h2 <= hi:
        raise UnreachableError(f"arm 2 cannot span h2={h2:.3f}", "arm2")
    gamma = _clamped_acos(xi_t / h1)
    beta = _clamped_acos((geom.d - xi_t) / h2)
    omega = _clamped_acos((h1 * h1 + geom.l1 ** 2 - geom.l2 ** 2) / (2 * h1 * geom.l1))
    theta = _clamped_acos((h2 * h2 + geom.l1 ** 2 - geom.l2 ** 2) / (2 * h2 * geom.l1))
    angles = JointAngles(
        xi=math.degrees(gamma + omega),
        sigma=180.0 - math.degrees(theta + beta),
    )
    fx, fy = forward_kinematics(geom, angles)
    if math.hypot(fx - xi_t, fy - yi_t) > 1e-6:
        raise UnreachableError(
            f"target ({xi_t:.3f},{yi_t:.3f}) lies in the lower assembly mode",
            "assembly_mode",
        )
    if with_diagnostics:
        diag = IkDiagnostics(
            h1, h2, math.degrees(beta), math.degrees(gamma),
            math.degrees(omega), math.degrees(theta),
        )
        return angles, diag
    return angles


def inverse_kinematics_printed(geom: RobotGeometry, target: tuple[float, float]) -> JointAngles:
    """Uncorrected formula variant, retained only for comparison tests."""
    xi_t, yi_t = target
    h1, h2 = _arm_distances(geom, target)
    beta = _clamped_acos((geom.d - xi_t) / h2)
    omega = _clamped_acos((h1 * h1 + geom.l1 ** 2 - geom.l2 ** 2) / (2 * h1 * geom.l1))
    # wrong denominator: first arm's 2*h1*L1 under the second arm's numerator
    arg = (h2 * h2 + geom.l1 ** 2 - geom.l2 ** 2) / (2 * h1 * geom.l1)
    theta = math.acos(max(-1.0, min(1.0, arg)))
    return JointAngles(
        xi=math.degrees(omega + theta),  # wrong composition: mixes the arms
        sigma=180.0 - math.degrees(theta + beta),
    )


def forward_kinematics(geom: RobotGeometry, angles: JointAngles) -> tuple[float, float]:
    """TCP from motor angles: intersect the distal circles, upper branch."""
    xi_r = math.radians(angles.xi)
    sg_r = math.radians(angles.sigma)
    e1 = (geom.l1 * math.cos(xi_r), geom.l1 * math.sin(xi_r))
    e2 = (geom.d + geom.l1 * math.cos(sg_r), geom.l1 * math.sin(sg_r))
    dx = e2[0] - e1[0]
    dy = e2[1] - e1[1]
    d = math.hypot(dx, dy)
    if d > 2 * geom.l2 + 1e-9 or d < 1e-12:
        raise ValueError(f"elbow circles do not intersect (separation {d:.6f})")
    a = d / 2.0
    h_sq = geom.l2 ** 2 - a * a
    h = math.sqrt(h_sq) if h_sq > 0 else 0.0
    mx = (e1[0] + e2[0]) / 2.0
    my = (e1[1] + e2[1]) / 2.0
    ux, uy = dx / d, dy / d
    p_up = (mx - uy * h, my + ux * h)
    p_dn = (mx + uy * h, my - ux * h)
    return p_up if p_up[1] >= p_dn[1] else p_dn


def workspace_contains(geom: RobotGeometry, target: tuple[float, float]) -> bool:
    """True iff inverse_kinematics succeeds for this target."""
    try:
        inverse_kinematics(geom, target)
        return True
    except (UnreachableError, ValueError):
        return False


def geometry_from_dict(tree: dict) -> RobotGeometry:
    return RobotGeometry(
        d=float(tree.get("D", 300.0)),
        l1=float(tree.get("L1", 200.0)),
        l2=float(tree.get("L2", 200.0)),
    )
