import math

import numpy as np
import pytest

from ldsitrack.events import SensorGeometry
from ldsitrack.scene import (
    CirclePath, LinearPath, NoiseSpec, SceneError, SceneSpec, WaypointPath,
    generate, ground_truth, preset_scene,
)

GEOM = SensorGeometry(32, 32)


def spec_with(traj, **kw):
    kw.setdefault("ball_radius", 3.0)
    kw.setdefault("duration_us", 200_000)
    return SceneSpec(GEOM, traj, **kw)


def test_stationary_ball_no_noise_is_empty():
    spec = spec_with(LinearPath((16, 16), (16, 16), 0.0))
    gen = generate(spec)
    assert len(gen.stream) == 0


def test_pixel_crossing_polarity_and_times():
    # ball of radius 3 sweeps left to right through pixel (16, 16)
    spec = spec_with(LinearPath((8, 16), (24, 16), 100.0), contrast_event_rate=2)
    gen = generate(spec)
    here = (gen.stream.x == 16) & (gen.stream.y == 16)
    t = gen.stream.t[here]
    p = gen.stream.p[here]
    assert p.tolist() == [1, 1, -1, -1]  # entering edge first, then leaving
    # edge reaches the pixel center when the ball center is 3 px away
    assert abs(t[0] - 50_000) < 1_000
    assert abs(t[2] - 110_000) < 1_000


def test_contrast_event_rate_multiplies_signal():
    traj = LinearPath((8, 16), (24, 16), 100.0)
    one = generate(spec_with(traj, contrast_event_rate=1))
    three = generate(spec_with(traj, contrast_event_rate=3))
    assert len(three.stream) == 3 * len(one.stream)


def test_signal_events_lie_on_disk_boundary():
    spec = spec_with(CirclePath((16, 16), 8, 200.0))
    gen = generate(spec)
    for i in range(0, len(gen.stream), 7):
        cx, cy = ground_truth(spec, int(gen.stream.t[i]))
        d = math.hypot(gen.stream.x[i] - cx, gen.stream.y[i] - cy)
        assert abs(d - spec.ball_radius) < 0.35


def test_background_noise_poisson_count():
    spec = spec_with(
        LinearPath((16, 16), (16, 16), 0.0),
        noise=NoiseSpec(background_rate=8.0),
        duration_us=1_000_000,
    )
    gen = generate(spec)
    mean = 8.0 * 32 * 32 * 1.0
    assert abs(len(gen.stream) - mean) < 5 * math.sqrt(mean)
    assert not gen.is_signal.any()


def test_hot_pixel_rate_and_position():
    spec = spec_with(
        LinearPath((16, 16), (16, 16), 0.0),
        noise=NoiseSpec(hot_pixels=((4, 9, 500.0),)),
        duration_us=1_000_000,
    )
    gen = generate(spec)
    assert (gen.stream.x == 4).all() and (gen.stream.y == 9).all()
    assert abs(len(gen.stream) - 500) < 5 * math.sqrt(500)


def test_tags_partition_signal_and_noise():
    spec = spec_with(
        CirclePath((16, 16), 8, 200.0), noise=NoiseSpec(background_rate=5.0)
    )
    gen = generate(spec)
    pure = generate(spec_with(CirclePath((16, 16), 8, 200.0)))
    assert int(gen.is_signal.sum()) == len(pure.stream)
    # every tagged-signal event sits on the ball boundary at its timestamp
    sig = gen.stream.x[gen.is_signal], gen.stream.y[gen.is_signal], \
        gen.stream.t[gen.is_signal]
    for i in range(0, len(sig[0]), 13):
        cx, cy = ground_truth(spec, int(sig[2][i]))
        assert math.hypot(sig[0][i] - cx, sig[1][i] - cy) < spec.ball_radius + 1


def test_determinism_same_seed():
    spec = preset_scene("circle", duration_us=300_000)
    assert generate(spec).stream == generate(spec).stream


def test_different_seed_different_noise():
    a = preset_scene("circle", duration_us=300_000, seed=1)
    b = preset_scene("circle", duration_us=300_000, seed=2)
    assert generate(a).stream != generate(b).stream


def test_ground_truth_linear_midpoint():
    spec = spec_with(LinearPath((0, 0), (10, 0), 100.0), duration_us=100_000)
    x, y = ground_truth(spec, 50_000)
    assert (x, y) == pytest.approx((5.0, 0.0))


def test_ground_truth_circle_quarter_period():
    # quarter arc: 2*pi*r/4 at speed v -> angle +90 degrees
    spec = spec_with(CirclePath((16, 16), 8, 4 * math.pi), duration_us=1_000_000)
    x, y = ground_truth(spec, 1_000_000)
    assert (x, y) == pytest.approx((16.0, 24.0), abs=1e-9)


def test_ground_truth_out_of_range():
    spec = spec_with(LinearPath((0, 0), (10, 0), 100.0))
    with pytest.raises(ValueError, match="outside"):
        ground_truth(spec, spec.duration_us + 1)


def test_truth_sampled_every_ms():
    gen = generate(spec_with(LinearPath((8, 16), (24, 16), 100.0)))
    assert np.diff(gen.truth_t).tolist() == [1000] * (len(gen.truth_t) - 1)


def test_waypoint_path_rests_at_end():
    path = WaypointPath(((0, 0), (10, 0)), 100.0)
    assert path.position(10**9) == (10, 0)


def test_trajectory_outside_sensor_rejected():
    with pytest.raises(SceneError, match="outside"):
        generate(spec_with(LinearPath((500, 500), (600, 600), 100.0)))


def test_preset_names():
    for name in ("circle", "diagonal", "zigzag"):
        assert preset_scene(name).noise.background_rate == 10.0
    with pytest.raises(SceneError):
        preset_scene("spiral")
