"""Deterministic synthetic scenes: a moving ball plus configurable noise.

Stands in for the event camera watching the air table. Signal events fire
when the ball's disk boundary sweeps a pixel center (entering edge +1,
leaving edge -1); noise is a per-pixel Poisson process. Everything is a
pure function of the SceneSpec + seed, and every generated event carries a
signal/noise tag so filter precision can be measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ldsitrack.events import EventStream, SensorGeometry, sort_order

US_PER_S = 1_000_000
TRUTH_SAMPLE_US = 1_000  # ground truth sampled at 1 kHz


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class LinearPath:
    """Straight segment traversed at constant speed, then rest at the end."""

    start: tuple[float, float]
    end: tuple[float, float]
    speed: float  # px/s

    def position(self, t_us: int) -> tuple[float, float]:
        x0, y0 = self.start
        x1, y1 = self.end
        dist = math.hypot(x1 - x0, y1 - y0)
        if self.speed <= 0 or dist == 0:
            return self.start
        travel_us = dist / self.speed * US_PER_S
        f = min(t_us / travel_us, 1.0)
        return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    def envelope(self):
        xs = (self.start[0], self.end[0])
        ys = (self.start[1], self.end[1])
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class CirclePath:
    """Circular arc at constant speed, wrapping indefinitely."""

    center: tuple[float, float]
    radius: float
    speed: float  # px/s along the arc
    start_angle_deg: float = 0.0

    def position(self, t_us: int) -> tuple[float, float]:
        ang = math.radians(self.start_angle_deg)
        if self.radius > 0:
            ang += self.speed / self.radius * (t_us / US_PER_S)
        return (
            self.center[0] + self.radius * math.cos(ang),
            self.center[1] + self.radius * math.sin(ang),
        )

    def envelope(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cy - r, cx + r, cy + r


@dataclass(frozen=True)
class WaypointPath:
    """Piecewise-linear path through waypoints at constant speed, then rest."""

    points: tuple[tuple[float, float], ...]
    speed: float  # px/s

    def position(self, t_us: int) -> tuple[float, float]:
        if len(self.points) == 1 or self.speed <= 0:
            return self.points[0]
        remaining = self.speed * (t_us / US_PER_S)
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            seg = math.hypot(x1 - x0, y1 - y0)
            if remaining <= seg and seg > 0:
                f = remaining / seg
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
            remaining -= seg
        return self.points[-1]

    def envelope(self):
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return min(xs), min(ys), max(xs), max(ys)


Trajectory = LinearPath | CirclePath | WaypointPath


@dataclass(frozen=True)
class NoiseSpec:
    background_rate: float = 0.0  # events/s/pixel, uniform over the sensor
    hot_pixels: tuple[tuple[int, int, float], ...] = ()  # (x, y, events/s)

    def __post_init__(self):
        if self.background_rate < 0:
            raise ValueError("background_rate must be >= 0")
        for x, y, rate in self.hot_pixels:
            if rate < 0:
                raise ValueError(f"hot pixel ({x},{y}) rate must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    geometry: SensorGeometry
    trajectory: Trajectory
    ball_radius: float = 6.0
    contrast_event_rate: int = 2  # events emitted per pixel-crossing
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    duration_us: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.duration_us <= 0:
            raise ValueError("duration must be > 0")
        if self.ball_radius <= 0:
            raise ValueError("ball_radius must be > 0")
        if self.contrast_event_rate < 1:
            raise ValueError("contrast_event_rate must be >= 1")


@dataclass
class GeneratedScene:
    """Event stream plus per-event signal tags and 1 kHz ground truth."""

    spec: SceneSpec
    stream: EventStream
    is_signal: np.ndarray  # bool, aligned with stream order
    truth_t: np.ndarray  # us
    truth_x: np.ndarray
    truth_y: np.ndarray

    def truth_csv(self) -> str:
        lines = ["t,x,y"]
        for t, x, y in zip(self.truth_t, self.truth_x, self.truth_y):
            lines.append(f"{t},{x:.6f},{y:.6f}")
        return "\n".join(lines) + "\n"

    def tags_text(self) -> str:
        return "".join("1\n" if s else "0\n" for s in self.is_signal)


def ground_truth(spec: SceneSpec, t_us: int) -> tuple[float, float]:
    """Analytic ball center at t; t must lie in [0, duration]."""
    if not 0 <= t_us <= spec.duration_us:
        raise ValueError(f"t={t_us} outside [0, {spec.duration_us}]")
    return spec.trajectory.position(t_us)


def _signal_events(spec: SceneSpec):
    """Boundary-crossing events: (t, x, y, p) arrays in emission order."""
    geom = spec.geometry
    traj = spec.trajectory
    r = spec.ball_radius
    speed = getattr(traj, "speed", 0.0)
    ts: list[np.ndarray] = []
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    ps: list[np.ndarray] = []
    if speed <= 0:
        return ts, xs, ys, ps
    # step small enough that the disk moves < 0.2 px between samples
    step_us = max(10, min(1000, int(0.2 / speed * US_PER_S)))
    n_steps = int(math.ceil(spec.duration_us / step_us))
    c0 = traj.position(0)
    t0 = 0
    for k in range(1, n_steps + 1):
        t1 = min(k * step_us, spec.duration_us)
        c1 = traj.position(t1)
        if abs(c1[0] - c0[0]) < 1e-12 and abs(c1[1] - c0[1]) < 1e-12:
            c0, t0 = c1, t1
            continue
        lox = max(0, int(math.floor(min(c0[0], c1[0]) - r - 1)))
        hix = min(geom.width - 1, int(math.ceil(max(c0[0], c1[0]) + r + 1)))
        loy = max(0, int(math.floor(min(c0[1], c1[1]) - r - 1)))
        hiy = min(geom.height - 1, int(math.ceil(max(c0[1], c1[1]) + r + 1)))
        if lox > hix or loy > hiy:
            c0, t0 = c1, t1
            continue
        xx, yy = np.meshgrid(
            np.arange(lox, hix + 1), np.arange(loy, hiy + 1), indexing="xy"
        )
        d0 = np.hypot(xx - c0[0], yy - c0[1]) - r
        d1 = np.hypot(xx - c1[0], yy - c1[1]) - r
        crossed = (d0 > 0) != (d1 > 0)
        if np.any(crossed):
            frac = d0[crossed] / (d0[crossed] - d1[crossed])
            t_cross = np.rint(t0 + frac * (t1 - t0)).astype(np.int64)
            pol = np.where(d0[crossed] > 0, 1, -1).astype(np.int8)
            ts.append(t_cross)
            xs.append(xx[crossed].astype(np.int32))
            ys.append(yy[crossed].astype(np.int32))
            ps.append(pol)
        c0, t0 = c1, t1
    if spec.contrast_event_rate > 1 and ts:
        rep = spec.contrast_event_rate
        ts = [np.repeat(a, rep) for a in ts]
        xs = [np.repeat(a, rep) for a in xs]
        ys = [np.repeat(a, rep) for a in ys]
        ps = [np.repeat(a, rep) for a in ps]
    return ts, xs, ys, ps


def _noise_events(spec: SceneSpec):
    geom = spec.geometry
    noise = spec.noise
    dur_s = spec.duration_us / US_PER_S
    ts, xs, ys, ps = [], [], [], []
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFF, 0x6E6F6973])
    if noise.background_rate > 0:
        n = rng.poisson(noise.background_rate * geom.width * geom.height * dur_s)
        ts.append(rng.integers(0, spec.duration_us, n, dtype=np.int64))
        xs.append(rng.integers(0, geom.width, n, dtype=np.int64).astype(np.int32))
        ys.append(rng.integers(0, geom.height, n, dtype=np.int64).astype(np.int32))
        ps.append(np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8))
    for x, y, rate in noise.hot_pixels:
        if not (0 <= x < geom.width and 0 <= y < geom.height):
            raise SceneError(f"hot pixel ({x},{y}) outside sensor")
        n = rng.poisson(rate * dur_s)
        ts.append(rng.integers(0, spec.duration_us, n, dtype=np.int64))
        xs.append(np.full(n, x, np.int32))
        ys.append(np.full(n, y, np.int32))
        ps.append(np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8))
    return ts, xs, ys, ps


def generate(spec: SceneSpec) -> GeneratedScene:
    """Synthesize the scene's event stream, deterministic for a fixed seed."""
    geom = spec.geometry
    lox, loy, hix, hiy = spec.trajectory.envelope()
    if hix < -spec.ball_radius or lox >= geom.width + spec.ball_radius or \
            hiy < -spec.ball_radius or loy >= geom.height + spec.ball_radius:
        raise SceneError("trajectory entirely outside the sensor")
    s_ts, s_xs, s_ys, s_ps = _signal_events(spec)
    n_ts, n_xs, n_ys, n_ps = _noise_events(spec)
    n_signal = sum(len(a) for a in s_ts)
    t = np.concatenate(s_ts + n_ts) if (s_ts or n_ts) else np.empty(0, np.int64)
    x = np.concatenate(s_xs + n_xs) if (s_xs or n_xs) else np.empty(0, np.int32)
    y = np.concatenate(s_ys + n_ys) if (s_ys or n_ys) else np.empty(0, np.int32)
    p = np.concatenate(s_ps + n_ps) if (s_ps or n_ps) else np.empty(0, np.int8)
    tags = np.zeros(len(t), bool)
    tags[:n_signal] = True
    order = sort_order(t, x, y, p)
    stream = EventStream(geom, t[order], x[order], y[order], p[order])
    # EventStream re-sorts with the same stable key, so tags stay aligned
    truth_t = np.arange(0, spec.duration_us + 1, TRUTH_SAMPLE_US, dtype=np.int64)
    centers = [spec.trajectory.position(int(tt)) for tt in truth_t]
    return GeneratedScene(
        spec,
        stream,
        tags[order],
        truth_t,
        np.array([c[0] for c in centers]),
        np.array([c[1] for c in centers]),
    )


def trajectory_from_dict(tree: dict) -> Trajectory:
    kind = tree.get("kind", "linear")
    if kind == "linear":
        sx, sy = tree["start"]
        ex, ey = tree["end"]
        return LinearPath((float(sx), float(sy)), (float(ex), float(ey)), float(tree["speed"]))
    if kind == "circle":
        cx, cy = tree["center"]
        return CirclePath(
            (float(cx), float(cy)),
            float(tree["radius"]),
            float(tree["speed"]),
            float(tree.get("start_angle_deg", 0.0)),
        )
    if kind == "waypoints":
        flat = [float(v) for v in tree["points"]]
        pts = tuple(zip(flat[0::2], flat[1::2]))
        return WaypointPath(pts, float(tree["speed"]))
    raise SceneError(f"unknown trajectory kind {kind!r}")


def scene_from_dict(tree: dict) -> SceneSpec:
    """Build a SceneSpec from the shared key/value config schema."""
    gw, gh = tree.get("geometry", [128, 128])
    noise_tree = tree.get("noise", {})
    hot = noise_tree.get("hot_pixels", [])
    hot_triples = tuple(
        (int(hot[i]), int(hot[i + 1]), float(hot[i + 2])) for i in range(0, len(hot), 3)
    )
    return SceneSpec(
        geometry=SensorGeometry(int(gw), int(gh)),
        trajectory=trajectory_from_dict(tree["trajectory"]),
        ball_radius=float(tree.get("ball_radius", 6.0)),
        contrast_event_rate=int(tree.get("contrast_event_rate", 2)),
        noise=NoiseSpec(float(noise_tree.get("background_rate", 0.0)), hot_triples),
        duration_us=int(tree.get("duration_us", 1_000_000)),
        seed=int(tree.get("seed", 0)),
    )


# Scene presets mirroring the three selectable ball paths on the air table.
def preset_scene(name: str, *, duration_us: int = 2_000_000, seed: int = 7,
                 background_rate: float = 10.0) -> SceneSpec:
    geom = SensorGeometry(128, 128)
    noise = NoiseSpec(background_rate=background_rate)
    if name == "circle":
        traj: Trajectory = CirclePath((64.0, 64.0), 40.0, 500.0)
    elif name == "diagonal":
        traj = LinearPath((15.0, 15.0), (112.0, 112.0), 500.0)
    elif name == "zigzag":
        traj = WaypointPath(
            ((15.0, 30.0), (112.0, 30.0), (15.0, 96.0), (112.0, 96.0)), 500.0
        )
    else:
        raise SceneError(f"unknown scene preset {name!r}")
    return SceneSpec(geom, traj, noise=noise, duration_us=duration_us, seed=seed)


SCENE_PRESETS = ("circle", "diagonal", "zigzag")
