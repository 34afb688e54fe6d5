import math

import numpy as np
import pytest

from ldsitrack.kinematics import (
    JointAngles, RobotGeometry, UnreachableError, forward_kinematics,
    geometry_from_dict, inverse_kinematics, inverse_kinematics_printed,
    workspace_contains,
)

GEOM = RobotGeometry()


def test_symmetric_target_symmetric_angles():
    angles = inverse_kinematics(GEOM, (150.0, 250.0))
    assert angles.xi == pytest.approx(180.0 - angles.sigma, abs=1e-9)


def test_round_trip_sample():
    rng = np.random.default_rng(2)
    n = 0
    while n < 200:
        x = rng.uniform(-100, 400)
        y = rng.uniform(1, 380)
        try:
            angles = inverse_kinematics(GEOM, (x, y))
        except UnreachableError:
            continue
        fx, fy = forward_kinematics(GEOM, angles)
        assert math.hypot(fx - x, fy - y) < 1e-9
        n += 1


def test_unreachable_reasons():
    with pytest.raises(UnreachableError) as e:
        inverse_kinematics(GEOM, (150.0, -50.0))
    assert e.value.reason == "half_plane"
    with pytest.raises(UnreachableError) as e:
        inverse_kinematics(GEOM, (-350.0, 250.0))
    assert e.value.reason == "arm1"
    with pytest.raises(UnreachableError) as e:
        inverse_kinematics(GEOM, (-80.0, 250.0))  # arm 1 spans, arm 2 cannot
    assert e.value.reason == "arm2"


def test_lower_assembly_mode_rejected():
    # close to motor 1 and low: the elbow-up branch puts the TCP elsewhere
    found = False
    for x, y in ((10.0, 30.0), (290.0, 30.0), (5.0, 80.0)):
        try:
            inverse_kinematics(GEOM, (x, y))
        except UnreachableError as e:
            if e.reason == "assembly_mode":
                found = True
    assert found


def test_workspace_membership():
    top = math.sqrt((GEOM.l1 + GEOM.l2) ** 2 - (GEOM.d / 2) ** 2)
    assert workspace_contains(GEOM, (GEOM.d / 2, top - 1e-3))
    assert not workspace_contains(GEOM, (GEOM.d / 2, top + 1e-3))
    assert not workspace_contains(GEOM, (0.0, 0.0))
    assert workspace_contains(GEOM, (150.0, 250.0))


def test_boundary_acos_clamping():
    # target exactly at full extension of arm 1 (h1 == L1 + L2)
    x = 200.0
    y = math.sqrt((GEOM.l1 + GEOM.l2) ** 2 - x * x)
    angles = inverse_kinematics(GEOM, (x, y))
    fx, fy = forward_kinematics(GEOM, angles)
    assert math.hypot(fx - x, fy - y) < 1e-9


def test_continuity_of_small_steps():
    a = inverse_kinematics(GEOM, (150.0, 250.0))
    b = inverse_kinematics(GEOM, (150.1, 250.0))
    assert abs(a.xi - b.xi) + abs(a.sigma - b.sigma) < 1.0


def test_diagnostics_consistent():
    angles, diag = inverse_kinematics(GEOM, (120.0, 260.0), with_diagnostics=True)
    assert diag.h1 == pytest.approx(math.hypot(120, 260))
    assert diag.h2 == pytest.approx(math.hypot(180, 260))
    assert angles.xi == pytest.approx(diag.gamma + diag.omega)
    assert angles.sigma == pytest.approx(180 - diag.theta - diag.beta)


def test_printed_variant_fails_round_trip():
    target = (180.0, 260.0)
    good = inverse_kinematics(GEOM, target)
    bad = inverse_kinematics_printed(GEOM, target)
    gx, gy = forward_kinematics(GEOM, good)
    bx, by = forward_kinematics(GEOM, bad)
    assert math.hypot(gx - target[0], gy - target[1]) < 1e-9
    assert math.hypot(bx - target[0], by - target[1]) > 1.0


def test_forward_kinematics_rejects_impossible_pose():
    with pytest.raises(ValueError, match="intersect"):
        forward_kinematics(RobotGeometry(d=300, l1=200, l2=10),
                           JointAngles(90.0, 90.0))


def test_geometry_validation_and_dict():
    with pytest.raises(ValueError):
        RobotGeometry(d=-1)
    g = geometry_from_dict({"D": 250, "L1": 180})
    assert (g.d, g.l1, g.l2) == (250.0, 180.0, 200.0)
