"""Live mode: streaming pipeline with a local control socket.

The engine replays the selected scene in 20 ms chunks (looping), keeps
the LDSI state, tracker buffer and servo model across chunks, and
publishes periodic snapshots (raw/filtered accumulation images, current
estimate, TCP position, metrics). Clients connect over a local TCP
socket with 4-byte big-endian length-prefixed JSON messages, or via a
WebSocket upgrade for browsers; parameter updates are validated
immediately, acked, and applied at the next chunk boundary (a whole
number of bus cycles).
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import queue
import select
import socket
import struct
import threading
import time

import numpy as np

from ldsitrack import ldsi, scene as scene_mod, tracker as tracker_mod
from ldsitrack.events import EventStream
from ldsitrack.kinematics import JointAngles, forward_kinematics, inverse_kinematics
from ldsitrack.pipeline import RunSpec, _ServoModel, check_workspace_envelope
from ldsitrack import frame_baseline as fb

CHUNK_US = 20_000
WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_PARAM_KEYS = {
    "ERCO": "erco", "ERCN": "ercn", "ERNC": "ernc", "TCE": "tce",
    "TNE": "tne", "MTR_ms": None, "DERP": "derp", "DERC": "derc", "DL": "dl",
}


def params_to_wire(params: ldsi.LdsiParams) -> dict:
    return {
        "ERCO": params.erco, "ERCN": params.ercn, "ERNC": params.ernc,
        "TCE": params.tce, "TNE": params.tne, "MTR_ms": params.mtr_us / 1000.0,
        "DERP": params.derp, "DERC": params.derc, "DL": params.dl,
    }


def params_from_wire(base: ldsi.LdsiParams, edits: dict) -> ldsi.LdsiParams:
    fields = {}
    for key, value in edits.items():
        if key not in _PARAM_KEYS:
            raise ValueError(f"unknown parameter {key!r}")
        if key == "MTR_ms":
            fields["mtr_us"] = int(float(value) * 1000)
        elif key == "DL":
            fields["dl"] = int(value)
        else:
            fields[_PARAM_KEYS[key]] = float(value)
    return base.with_updates(**fields)


class LiveEngine(threading.Thread):
    """Continuously running simulation core; single writer of its state."""

    def __init__(self, spec: RunSpec, realtime: bool = False):
        super().__init__(daemon=True)
        check_workspace_envelope(spec)
        self.spec = spec
        self.realtime = realtime
        self.inbox: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._snapshot: dict | None = None
        self.mode = spec.mode if spec.mode != "both" else "event"
        self.scene_name = "circle"
        self._load_scene(self.spec.scene)
        self._reset_processing()
        self.epoch_us = 0  # virtual time at the start of the current replay
        self.now_us = 0
        self.total_in = 0
        self.total_out = 0

    def _load_scene(self, spec_scene):
        self.scene_spec = spec_scene
        self.generated = scene_mod.generate(spec_scene)

    def _reset_processing(self):
        geom = self.scene_spec.geometry
        self.ldsi_state = ldsi.LdsiState(geom, self.spec.ldsi)
        self.pending = EventStream(geom)
        center = self.spec.px_to_mm.to_mm((geom.width - 1) / 2, (geom.height - 1) / 2)
        self.servo = _ServoModel(
            inverse_kinematics(self.spec.robot, center), self.spec.servo_tau_ms
        )
        self.estimate = None
        self.last_frame_idx = -1

    def stop(self):
        self._stop.set()

    # ---- control plane -------------------------------------------------
    def post(self, kind: str, payload: dict) -> dict:
        """Validate a control message; queue it for the next chunk boundary."""
        if kind == "set_params":
            new_ldsi = params_from_wire(self.spec.ldsi, payload.get("ldsi", {}))
            tr = payload.get("tracker", {})
            new_tracker = tracker_mod.TrackerParams(
                window=int(tr.get("window", self.spec.tracker.window)),
                vicinity_radius=int(
                    tr.get("vicinity_radius", self.spec.tracker.vicinity_radius)
                ),
            )
            self.inbox.put(("params", (new_ldsi, new_tracker)))
            return {"ldsi": params_to_wire(new_ldsi),
                    "tracker": {"window": new_tracker.window,
                                "vicinity_radius": new_tracker.vicinity_radius}}
        if kind == "set_mode":
            mode = payload.get("mode")
            if mode not in ("event", "frame"):
                raise ValueError(f"mode must be event or frame, got {mode!r}")
            self.inbox.put(("mode", mode))
            return {"mode": mode}
        if kind == "set_scene":
            preset = payload.get("preset")
            if preset not in scene_mod.SCENE_PRESETS:
                raise ValueError(f"unknown scene preset {preset!r}")
            self.inbox.put(("scene", preset))
            return {"preset": preset}
        raise ValueError(f"unknown message kind {kind!r}")

    def _drain_inbox(self):
        changed_filter = False
        while True:
            try:
                item, value = self.inbox.get_nowait()
            except queue.Empty:
                break
            if item == "params":
                self.spec.ldsi, self.spec.tracker = value
                changed_filter = True
            elif item == "mode":
                self.mode = value
            elif item == "scene":
                self.scene_name = value
                self._load_scene(scene_mod.preset_scene(
                    value, duration_us=self.scene_spec.duration_us,
                    seed=self.scene_spec.seed,
                ))
                changed_filter = True
        if changed_filter:
            self._reset_processing()

    # ---- data plane ----------------------------------------------------
    def _slice_scene(self, local_t0: int, local_t1: int) -> EventStream:
        st = self.generated.stream
        lo = int(np.searchsorted(st.t, local_t0))
        hi = int(np.searchsorted(st.t, local_t1))
        return EventStream(
            st.geometry, st.t[lo:hi] + self.epoch_us, st.x[lo:hi],
            st.y[lo:hi], st.p[lo:hi],
        )

    @staticmethod
    def _accumulate(stream: EventStream, geom) -> np.ndarray:
        img = np.zeros((geom.height, geom.width), np.uint8)
        if len(stream):
            np.add.at(img, (stream.y, stream.x), 64)
        return img

    def _process_chunk(self):
        self._drain_inbox()
        local_t0 = self.now_us - self.epoch_us
        if local_t0 >= self.scene_spec.duration_us:
            self.epoch_us = self.now_us
            local_t0 = 0
        local_t1 = min(local_t0 + CHUNK_US, self.scene_spec.duration_us)
        raw = self._slice_scene(local_t0, local_t1)
        geom = self.scene_spec.geometry
        if self.mode == "event":
            filtered = ldsi.filter_stream(raw, self.spec.ldsi, state=self.ldsi_state)
            self.total_in += len(raw)
            self.total_out += len(filtered)
            from ldsitrack.events import merge_streams
            self.pending = merge_streams(self.pending, filtered)
            win = self.spec.tracker.window
            while len(self.pending) >= win:
                head = EventStream(
                    geom, self.pending.t[:win], self.pending.x[:win],
                    self.pending.y[:win], self.pending.p[:win],
                )
                est = tracker_mod.track_window(head, self.spec.tracker)
                self.estimate = est
                self.pending = EventStream(
                    geom, self.pending.t[win:], self.pending.x[win:],
                    self.pending.y[win:], self.pending.p[win:],
                )
        else:
            filtered = EventStream(geom)
            self.total_in += len(raw)
            period = 1_000_000 / self.spec.fps
            idx = int(local_t1 / period)
            if idx != self.last_frame_idx:
                self.last_frame_idx = idx
                frame = fb.render_frame(
                    self.scene_spec, self.spec.cam, int(idx * period)
                )
                hit = fb.detect_blob(frame, self.spec.blob)
                if hit is not None:
                    sx = (hit[0] - self.spec.px_to_mm.offset[0]) / self.spec.px_to_mm.scale[0]
                    sy = (hit[1] - self.spec.px_to_mm.offset[1]) / self.spec.px_to_mm.scale[1]
                    self.estimate = tracker_mod.PositionEstimate(
                        int(round(sx)), int(round(sy)), int(idx * period) + self.epoch_us, 0
                    )
        chunk_end = self.now_us + CHUNK_US
        if self.estimate is not None:
            mm = self.spec.px_to_mm.to_mm(self.estimate.x, self.estimate.y)
            try:
                target = inverse_kinematics(self.spec.robot, mm)
                # command lands one bus cycle after the estimate
                self.servo.command(
                    target,
                    max(self.servo.last_t,
                        self.estimate.t + self.spec.bus.cycle_time_us),
                )
            except Exception:
                pass  # noise estimate outside workspace: hold position
        self.servo.advance(chunk_end)
        tcp = forward_kinematics(
            self.spec.robot, JointAngles(self.servo.xi, self.servo.sigma)
        )
        local_end = min(local_t1, self.scene_spec.duration_us)
        truth_px = self.scene_spec.trajectory.position(int(local_end))
        truth_mm = self.spec.px_to_mm.to_mm(*truth_px)
        err = math.hypot(tcp[0] - truth_mm[0], tcp[1] - truth_mm[1])
        snapshot = {
            "kind": "snapshot",
            "t_us": chunk_end,
            "mode": self.mode,
            "scene": self.scene_name,
            "params": {
                "ldsi": params_to_wire(self.spec.ldsi),
                "tracker": {
                    "window": self.spec.tracker.window,
                    "vicinity_radius": self.spec.tracker.vicinity_radius,
                },
            },
            "estimate": (
                {"x": self.estimate.x, "y": self.estimate.y, "t_us": self.estimate.t}
                if self.estimate else None
            ),
            "tcp_mm": {"x": tcp[0], "y": tcp[1]},
            "truth_mm": {"x": truth_mm[0], "y": truth_mm[1]},
            "metrics": {
                "raw_count": len(raw),
                "filtered_count": len(filtered),
                "reduction_ratio": (
                    1.0 - self.total_out / self.total_in if self.total_in else 0.0
                ),
                "tcp_error_mm": err,
            },
            "raw_image": _image_to_wire(self._accumulate(raw, geom)),
            "filtered_image": _image_to_wire(self._accumulate(filtered, geom)),
        }
        with self._lock:
            self._snapshot = snapshot
        self.now_us = chunk_end

    def snapshot(self) -> dict | None:
        with self._lock:
            return self._snapshot

    def run(self):
        while not self._stop.is_set():
            start = time.monotonic()
            self._process_chunk()
            if self.realtime:
                elapsed = time.monotonic() - start
                time.sleep(max(0.0, CHUNK_US / 1e6 - elapsed))
            else:
                time.sleep(0.001)  # yield; as-fast-as-possible pacing


def _image_to_wire(img: np.ndarray) -> dict:
    return {
        "format": "raw8",
        "width": img.shape[1],
        "height": img.shape[0],
        "data": base64.b64encode(img.tobytes()).decode("ascii"),
    }


# ---- transport ---------------------------------------------------------

class _RawChannel:
    def __init__(self, sock: socket.socket):
        self.sock = sock

    def recv_message(self) -> dict | None:
        header = _recv_exact(self.sock, 4)
        if header is None:
            return None
        (length,) = struct.unpack(">I", header)
        body = _recv_exact(self.sock, length)
        if body is None:
            return None
        return json.loads(body.decode("utf-8"))

    def send_message(self, message: dict) -> None:
        body = json.dumps(message).encode("utf-8")
        self.sock.sendall(struct.pack(">I", len(body)) + body)


class _WsChannel:
    """Minimal RFC 6455 server-side channel (text frames only)."""

    def __init__(self, sock: socket.socket, first_bytes: bytes):
        self.sock = sock
        data = first_bytes
        while b"\r\n\r\n" not in data:
            more = sock.recv(4096)
            if not more:
                raise ConnectionError("client closed during handshake")
            data += more
        headers = {}
        for line in data.split(b"\r\n")[1:]:
            if b":" in line:
                k, v = line.split(b":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get(b"sec-websocket-key", b"").decode()
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()
        ).decode()
        sock.sendall(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode()
        )

    def recv_message(self) -> dict | None:
        while True:
            head = _recv_exact(self.sock, 2)
            if head is None:
                return None
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                ext = _recv_exact(self.sock, 2)
                (length,) = struct.unpack(">H", ext)
            elif length == 127:
                ext = _recv_exact(self.sock, 8)
                (length,) = struct.unpack(">Q", ext)
            mask = _recv_exact(self.sock, 4) if masked else b"\x00" * 4
            payload = _recv_exact(self.sock, length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                return None
            if opcode == 0x9:  # ping -> pong
                self._send_frame(0xA, payload)
                continue
            if opcode in (0x1, 0x2):
                return json.loads(payload.decode("utf-8"))

    def _send_frame(self, opcode: int, payload: bytes) -> None:
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 65536:
            header += bytes([126]) + struct.pack(">H", n)
        else:
            header += bytes([127]) + struct.pack(">Q", n)
        self.sock.sendall(header + payload)

    def send_message(self, message: dict) -> None:
        self._send_frame(0x1, json.dumps(message).encode("utf-8"))


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except OSError:
            return None
        if not chunk:
            return None
        buf += chunk
    return buf


class LiveServer:
    """Accepts control clients and pushes snapshots at a fixed rate."""

    def __init__(self, engine: LiveEngine, host: str = "127.0.0.1",
                 port: int = 0, snapshot_hz: float = 30.0):
        self.engine = engine
        self.snapshot_period = 1.0 / snapshot_hz
        self._server = socket.create_server((host, port))
        self.port = self._server.getsockname()[1]
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    def serve_forever(self):
        self._server.settimeout(0.2)
        while not self._stop.is_set():
            try:
                client, _ = self._server.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            th = threading.Thread(target=self._handle, args=(client,), daemon=True)
            th.start()
            self._threads.append(th)

    def start(self) -> threading.Thread:
        th = threading.Thread(target=self.serve_forever, daemon=True)
        th.start()
        return th

    def stop(self):
        self._stop.set()
        self._server.close()

    def _handle(self, sock: socket.socket):
        try:
            first = _recv_exact(sock, 4)
            if first is None:
                return
            if first == b"GET ":
                channel = _WsChannel(sock, first)
            else:
                channel = _RawChannel(sock)
                # the four bytes already read are the first length prefix
                (length,) = struct.unpack(">I", first)
                body = _recv_exact(sock, length)
                if body is None:
                    return
                self._dispatch(channel, json.loads(body.decode("utf-8")))
            last_snap = 0.0
            while not self._stop.is_set():
                now = time.monotonic()
                if now - last_snap >= self.snapshot_period:
                    snap = self.engine.snapshot()
                    if snap is not None:
                        try:
                            channel.send_message(snap)
                        except OSError:
                            return
                    last_snap = now
                ready, _, _ = select.select([sock], [], [], 0.02)
                if not ready:
                    continue
                try:
                    msg = channel.recv_message()
                except (OSError, ValueError):
                    return
                if msg is None:
                    return
                self._dispatch(channel, msg)
        finally:
            try:
                sock.close()
            except OSError:
                pass

    def _dispatch(self, channel, msg: dict):
        seq = msg.get("seq")
        kind = msg.get("kind")
        try:
            if kind == "hello":
                channel.send_message({"kind": "ack", "seq": seq, "format": "raw8"})
                return
            applied = self.engine.post(kind, msg)
            channel.send_message({"kind": "ack", "seq": seq, "applied": applied})
        except (ValueError, TypeError, KeyError) as exc:
            try:
                channel.send_message({"kind": "error", "seq": seq, "message": str(exc)})
            except OSError:
                pass


def serve(spec: RunSpec, host: str = "127.0.0.1", port: int = 0,
          realtime: bool = False, snapshot_hz: float = 30.0) -> tuple[LiveEngine, LiveServer]:
    """Start the live engine + control server; returns both (non-blocking)."""
    engine = LiveEngine(spec, realtime=realtime)
    engine.start()
    server = LiveServer(engine, host, port, snapshot_hz)
    server.start()
    return engine, server
