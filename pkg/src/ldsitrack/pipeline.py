"""Closed tracking loop: scene -> perception -> bus -> IK -> servo -> TCP.

Composes the synthetic scene, the event path (LDSI filter + vicinity
tracker) or the frame path (rendered frames + blob detection), the cyclic
bus simulation, inverse kinematics and a first-order servo model into one
deterministic batch run, reporting tracking error, latency and data
volume for either or both perception modes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ldsitrack import config as cfg
from ldsitrack import frame_baseline as fb
from ldsitrack import ldsi, netsim, scene as scene_mod, tracker as tracker_mod
from ldsitrack.events import EventStream
from ldsitrack.kinematics import (
    JointAngles, RobotGeometry, forward_kinematics, geometry_from_dict,
    inverse_kinematics, workspace_contains,
)

US_PER_S = 1_000_000
EVENT_RECORD_BYTES = 16
FRAME_PIXEL_BYTES = 1


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PxToMm:
    """Per-axis linear map from sensor pixels to robot millimetres."""

    scale: tuple[float, float] = (1.0, 1.0)
    # default places the 128 px sensor in the upper-assembly workspace
    offset: tuple[float, float] = (86.0, 200.0)

    def to_mm(self, x_px: float, y_px: float) -> tuple[float, float]:
        return (
            x_px * self.scale[0] + self.offset[0],
            y_px * self.scale[1] + self.offset[1],
        )


@dataclass
class RunSpec:
    scene: scene_mod.SceneSpec
    mode: str = "event"  # event | frame | both
    ldsi: ldsi.LdsiParams = field(default_factory=lambda: ldsi.PRESETS["medium"])
    tracker: tracker_mod.TrackerParams = field(default_factory=tracker_mod.TrackerParams)
    blob: fb.BlobParams | None = None  # derived from px_to_mm when None
    cam: fb.FrameCameraConfig = field(default_factory=fb.FrameCameraConfig)
    fps: float = 64.0
    robot: RobotGeometry = field(default_factory=RobotGeometry)
    bus: netsim.BusConfig = field(default_factory=netsim.BusConfig)
    servo_tau_ms: float = 20.0
    px_to_mm: PxToMm = field(default_factory=PxToMm)

    def __post_init__(self):
        if self.mode not in ("event", "frame", "both"):
            raise ValueError(f"mode must be event|frame|both, got {self.mode!r}")
        if self.blob is None:
            self.blob = self.derived_blob_params()

    def derived_blob_params(self) -> fb.BlobParams:
        # frame px -> scene px -> mm, composed into one per-axis linear map
        sx = self.px_to_mm.scale[0] / self.cam.scale
        sy = self.px_to_mm.scale[1] / self.cam.scale
        ox = self.px_to_mm.offset[0] - self.cam.offset[0] * sx
        oy = self.px_to_mm.offset[1] - self.cam.offset[1] * sy
        r_frame = self.scene.ball_radius * self.cam.scale
        area = math.pi * r_frame * r_frame
        return fb.BlobParams(
            roi=(0, 0, self.cam.width, self.cam.height),
            erode_radius=1,
            threshold_low=(self.cam.background + self.cam.ball_intensity) // 2,
            threshold_high=255,
            blob_min_area=int(area * 0.2),
            blob_max_area=int(area * 3.0) + 10,
            mm_scale=(sx, sy),
            mm_offset=(ox, oy),
        )


@dataclass
class CycleRecord:
    cycle: int
    t_us: float
    cmd_xi: float | None
    cmd_sigma: float | None
    act_xi: float
    act_sigma: float
    tcp_x: float
    tcp_y: float
    truth_x_mm: float
    truth_y_mm: float
    error_mm: float


@dataclass
class ModeReport:
    mode: str
    rms_error_mm: float
    max_error_mm: float
    settled_rms_error_mm: float  # after first command + 5 tau
    latency: netsim.LatencyStats
    data_bytes: int
    cycles: list[CycleRecord]
    n_estimates: int
    ldsi_metrics: ldsi.MetricsRecord | None = None
    filtered_count: int = 0
    raw_count: int = 0

    def summary_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "rms_error_mm": round(self.rms_error_mm, 6),
            "max_error_mm": round(self.max_error_mm, 6),
            "settled_rms_error_mm": round(self.settled_rms_error_mm, 6),
            "data_bytes": self.data_bytes,
            "n_estimates": self.n_estimates,
            "latency_us": {
                "count": self.latency.count,
                "min": round(self.latency.min_us, 3),
                "mean": round(self.latency.mean_us, 3),
                "max": round(self.latency.max_us, 3),
                "jitter": round(self.latency.jitter_us, 3),
                "max_cycles": round(self.latency.max_cycles, 3),
            },
        }
        if self.ldsi_metrics is not None:
            m = self.ldsi_metrics
            d["ldsi"] = {
                "input_count": m.input_count,
                "output_count": m.output_count,
                "reduction_ratio": round(m.reduction_ratio, 6),
                "signal_retention": round(m.signal_retention, 6),
                "noise_pass_through": round(m.noise_pass_through, 6),
            }
        return d


@dataclass
class RunReport:
    spec: RunSpec
    reports: dict[str, ModeReport]

    def to_json(self) -> str:
        return json.dumps(
            {mode: rep.summary_dict() for mode, rep in sorted(self.reports.items())},
            indent=2, sort_keys=True,
        ) + "\n"


class _ServoModel:
    """First-order lag per axis toward the last commanded angles."""

    def __init__(self, initial: JointAngles, tau_ms: float):
        self.xi = initial.xi
        self.sigma = initial.sigma
        self.target = initial
        self.tau_us = tau_ms * 1000.0
        self.last_t = 0.0

    def advance(self, t_us: float) -> None:
        dt = t_us - self.last_t
        if dt <= 0:
            return
        if self.tau_us <= 0:
            self.xi, self.sigma = self.target.xi, self.target.sigma
        else:
            k = math.exp(-dt / self.tau_us)
            self.xi = self.target.xi + (self.xi - self.target.xi) * k
            self.sigma = self.target.sigma + (self.sigma - self.target.sigma) * k
        self.last_t = t_us

    def command(self, target: JointAngles, t_us: float) -> None:
        self.advance(t_us)
        self.target = target


def check_workspace_envelope(spec: RunSpec) -> None:
    """Reject specs whose whole sensor area does not map into the workspace."""
    geom = spec.scene.geometry
    for x_px in np.linspace(0, geom.width - 1, 9):
        for y_px in np.linspace(0, geom.height - 1, 9):
            target = spec.px_to_mm.to_mm(float(x_px), float(y_px))
            if not workspace_contains(spec.robot, target):
                raise PipelineError(
                    f"sensor point ({x_px:.0f},{y_px:.0f}) px maps to "
                    f"({target[0]:.1f},{target[1]:.1f}) mm outside the workspace"
                )


def _node_offsets(bus: netsim.BusConfig) -> dict[str, tuple[float, float]]:
    """(request start, request end) offsets of each node within a cycle."""
    offsets = {}
    cursor = 0.0
    for node in bus.nodes:
        req_end = cursor + bus.tx_time_us(node.request_bytes)
        offsets[node.node_id] = (cursor, req_end)
        cursor = req_end + node.processing_delay_us + bus.tx_time_us(node.response_bytes)
    return offsets


def _run_loop(spec: RunSpec, positions: list[tuple[int, float, float]],
              mode: str) -> tuple[list[CycleRecord], list[netsim.BusCycle]]:
    """Drive the bus with position estimates (t_us, x_mm, y_mm)."""
    bus = spec.bus
    offsets = _node_offsets(bus)
    cam_req_off = offsets["camera"][0]
    servo_req_off, servo_req_end_off = offsets["servo"]
    center = spec.px_to_mm.to_mm(
        (spec.scene.geometry.width - 1) / 2, (spec.scene.geometry.height - 1) / 2
    )
    servo = _ServoModel(inverse_kinematics(spec.robot, center), spec.servo_tau_ms)
    records: list[CycleRecord] = []
    pos_t = np.array([p[0] for p in positions], dtype=np.int64)

    def latest_position(t_us: float):
        i = int(np.searchsorted(pos_t, t_us, side="right")) - 1
        return positions[i] if i >= 0 else None

    last_cmd: list[JointAngles | None] = [None]

    def mn_behavior(k: int, inbox: dict) -> dict:
        if mode == "event":
            report = inbox.get("camera")
            picked = None
            if isinstance(report, netsim.CameraReport) and report.x is not None:
                picked = spec.px_to_mm.to_mm(report.x, report.y)
        else:
            # frame PC side channel: latest detection at cycle start
            p = latest_position(k * bus.cycle_time_us)
            picked = (p[1], p[2]) if p else None
        requests: dict[str, object] = {
            "io": netsim.IoCommand(valve_pattern=1 << (k % 8)),
            "camera": netsim.FilterConfig(spec.ldsi, spec.tracker),
        }
        if picked is not None:
            try:
                last_cmd[0] = inverse_kinematics(spec.robot, picked)
            except Exception as exc:
                raise PipelineError(f"cycle {k}: unreachable target {picked}: {exc}")
        if last_cmd[0] is not None:
            requests["servo"] = netsim.ServoCommand(last_cmd[0].xi, last_cmd[0].sigma)
        for node in bus.nodes:
            if node.node_id in requests:
                netsim.check_payload_fits(requests[node.node_id], node.request_bytes)
        return requests

    def camera_behavior(k: int, request) -> netsim.CameraReport:
        if mode != "event":
            return netsim.CameraReport()
        p = latest_position(k * bus.cycle_time_us + cam_req_off)
        if p is None:
            return netsim.CameraReport()
        # camera reports raw pixels; MN converts to mm
        return netsim.CameraReport(x=p[3], y=p[4], t_us=p[0], support=p[5])

    def servo_behavior(k: int, request) -> netsim.ServoStatus:
        t_abs = k * bus.cycle_time_us + servo_req_end_off
        if isinstance(request, netsim.ServoCommand):
            servo.command(JointAngles(request.xi_deg, request.sigma_deg), t_abs)
        else:
            servo.advance(t_abs)
        tcp = forward_kinematics(spec.robot, JointAngles(servo.xi, servo.sigma))
        t_truth = min(int(t_abs), spec.scene.duration_us)
        truth_px = spec.scene.trajectory.position(t_truth)
        truth_mm = spec.px_to_mm.to_mm(*truth_px)
        cmd = last_cmd[0]
        records.append(CycleRecord(
            k, t_abs,
            cmd.xi if cmd else None, cmd.sigma if cmd else None,
            servo.xi, servo.sigma, tcp[0], tcp[1], truth_mm[0], truth_mm[1],
            math.hypot(tcp[0] - truth_mm[0], tcp[1] - truth_mm[1]),
        ))
        return netsim.ServoStatus(servo.xi, servo.sigma)

    def io_behavior(k: int, request):
        return request

    cycles = netsim.run_bus(
        bus, mn_behavior,
        {"camera": camera_behavior, "servo": servo_behavior, "io": io_behavior},
        spec.scene.duration_us,
    )
    return records, cycles


def _mode_report(spec: RunSpec, mode: str, positions, injections,
                 data_bytes: int, metrics=None, filtered_count=0,
                 raw_count=0) -> ModeReport:
    records, cycles = _run_loop(spec, positions, mode)
    errors = np.array([r.error_mm for r in records])
    first_cmd_t = next((r.t_us for r in records if r.cmd_xi is not None), None)
    settled = np.array([
        r.error_mm for r in records
        if first_cmd_t is not None
        and r.t_us >= first_cmd_t + 5 * spec.servo_tau_ms * 1000
    ])
    stats = netsim.latency_report(cycles, injections, spec.bus)
    return ModeReport(
        mode=mode,
        rms_error_mm=float(np.sqrt(np.mean(errors ** 2))) if len(errors) else 0.0,
        max_error_mm=float(errors.max()) if len(errors) else 0.0,
        settled_rms_error_mm=float(np.sqrt(np.mean(settled ** 2))) if len(settled) else 0.0,
        latency=stats,
        data_bytes=data_bytes,
        cycles=records,
        n_estimates=len(positions),
        ldsi_metrics=metrics,
        filtered_count=filtered_count,
        raw_count=raw_count,
    )


def run(spec: RunSpec,
        generated: scene_mod.GeneratedScene | None = None) -> RunReport:
    """Full deterministic batch run for the selected mode(s)."""
    check_workspace_envelope(spec)
    reports: dict[str, ModeReport] = {}
    gen = generated
    if spec.mode in ("event", "both"):
        if gen is None:
            gen = scene_mod.generate(spec.scene)
        filtered = ldsi.filter_stream(gen.stream, spec.ldsi)
        estimates = tracker_mod.track_stream(filtered, spec.tracker)
        positions = []
        for e in estimates:
            mm = spec.px_to_mm.to_mm(e.x, e.y)
            positions.append((e.t, mm[0], mm[1], e.x, e.y, e.support))
        metrics = ldsi.filter_metrics(
            gen.stream, filtered, gen.is_signal, gen.truth_t, gen.truth_x,
            gen.truth_y, spec.scene.ball_radius,
        )
        reports["event"] = _mode_report(
            spec, "event", positions, [float(e.t) for e in estimates],
            data_bytes=EVENT_RECORD_BYTES * len(filtered),
            metrics=metrics, filtered_count=len(filtered), raw_count=len(gen.stream),
        )
        reports["event"].estimates = estimates  # type: ignore[attr-defined]
    if spec.mode in ("frame", "both"):
        frames = fb.render_frames(spec.scene, spec.fps, spec.cam)
        positions = []
        for frame in frames:
            hit = fb.detect_blob(frame, spec.blob)
            if hit is not None:
                positions.append((frame.t, hit[0], hit[1], 0, 0, 0))
        frame_bytes = len(frames) * spec.cam.width * spec.cam.height * FRAME_PIXEL_BYTES
        reports["frame"] = _mode_report(
            spec, "frame", positions, [float(p[0]) for p in positions],
            data_bytes=frame_bytes,
        )
    return RunReport(spec, reports)


def compare_modes(report: RunReport) -> dict:
    """Side-by-side summary; requires a both-mode report."""
    if set(report.reports) != {"event", "frame"}:
        raise ValueError("compare_modes needs a mode=both run")
    ev = report.reports["event"]
    fr = report.reports["frame"]
    return {
        "event": ev.summary_dict(),
        "frame": fr.summary_dict(),
        "byte_ratio_event_over_frame": (
            ev.data_bytes / fr.data_bytes if fr.data_bytes else 0.0
        ),
        "rms_ratio_event_over_frame": (
            ev.rms_error_mm / fr.rms_error_mm if fr.rms_error_mm else 0.0
        ),
    }


def cycles_csv(records: list[CycleRecord]) -> str:
    lines = ["cycle,t_us,cmd_xi,cmd_sigma,act_xi,act_sigma,tcp_x,tcp_y,"
             "truth_x_mm,truth_y_mm,error_mm"]
    for r in records:
        cmd_xi = f"{r.cmd_xi:.6f}" if r.cmd_xi is not None else ""
        cmd_sg = f"{r.cmd_sigma:.6f}" if r.cmd_sigma is not None else ""
        lines.append(
            f"{r.cycle},{r.t_us:.3f},{cmd_xi},{cmd_sg},{r.act_xi:.6f},"
            f"{r.act_sigma:.6f},{r.tcp_x:.6f},{r.tcp_y:.6f},"
            f"{r.truth_x_mm:.6f},{r.truth_y_mm:.6f},{r.error_mm:.6f}"
        )
    return "\n".join(lines) + "\n"


def persist_report(report: RunReport, outdir: str, resolved_config: str = "") -> None:
    """Write the report bundle; bytes are deterministic for a fixed spec."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(report.to_json())
    for mode, rep in sorted(report.reports.items()):
        with open(os.path.join(outdir, f"cycles_{mode}.csv"), "w") as fh:
            fh.write(cycles_csv(rep.cycles))
    estimates = getattr(report.reports.get("event"), "estimates", None)
    if estimates is not None:
        with open(os.path.join(outdir, "estimates.csv"), "w") as fh:
            fh.write(tracker_mod.estimates_csv(estimates))
    if resolved_config:
        with open(os.path.join(outdir, "config.txt"), "w") as fh:
            fh.write(resolved_config)


def runspec_from_dict(tree: dict) -> RunSpec:
    """Build a RunSpec from the shared key/value config schema."""
    if "scene" in tree and "trajectory" in tree.get("scene", {}):
        scn = scene_mod.scene_from_dict(tree["scene"])
    else:
        preset = tree.get("scene", {}).get("preset", "circle")
        scn = scene_mod.preset_scene(
            preset,
            duration_us=int(tree.get("scene", {}).get("duration_us", 2_000_000)),
            seed=int(tree.get("scene", {}).get("seed", 7)),
            background_rate=float(tree.get("scene", {}).get("background_rate", 10.0)),
        )
    px_tree = tree.get("px_to_mm", {})
    px = PxToMm(
        scale=tuple(float(v) for v in px_tree.get("scale", (1.0, 1.0))),
        offset=tuple(float(v) for v in px_tree.get("offset", (86.0, 200.0))),
    )
    spec = RunSpec(
        scene=scn,
        mode=str(tree.get("mode", "event")),
        ldsi=ldsi.params_from_dict(tree.get("ldsi", {})),
        tracker=tracker_mod.TrackerParams(
            window=int(tree.get("tracker", {}).get("window", 20)),
            vicinity_radius=int(tree.get("tracker", {}).get("vicinity_radius", 3)),
        ),
        robot=geometry_from_dict(tree.get("robot", {})),
        bus=netsim.bus_from_dict(tree.get("bus", {})),
        servo_tau_ms=float(tree.get("servo_tau_ms", 20.0)),
        px_to_mm=px,
        fps=float(tree.get("fps", 64.0)),
    )
    return spec
