"""Core event datatype, ordered event streams and their file formats.

An event is (x, y, t, polarity): pixel address, microsecond timestamp and
the sign of the intensity change. Streams keep events sorted by
(t, y, x, polarity) so every downstream stage is replay-deterministic.

Two interchange formats:
  - CSV: header line "M,N", then "x,y,t,polarity" per event (polarity 1/-1).
  - binary: magic b"LDSIEVT1", u16-LE M, u16-LE N, then 16-byte records
    (u64-LE t, u16-LE x, u16-LE y, u8 polarity 0x01/0x00, 3 zero pad bytes).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

BINARY_MAGIC = b"LDSIEVT1"
_RECORD_DTYPE = np.dtype(
    [("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1"), ("pad", "u1", (3,))]
)


class StreamFormatError(ValueError):
    """Malformed stream input (bad record, bad geometry, bad ordering)."""


@dataclass(frozen=True)
class SensorGeometry:
    """Sensor size in pixels; inner processing layers are (M-2)x(N-2)."""

    width: int  # M, columns
    height: int  # N, rows

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise ValueError(f"sensor must be at least 3x3, got {self.width}x{self.height}")


@dataclass(frozen=True)
class Event:
    x: int
    y: int
    t: int  # microseconds
    polarity: int  # +1 or -1

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +-1, got {self.polarity}")
        if self.t < 0:
            raise ValueError(f"negative timestamp {self.t}")


def sort_order(t: np.ndarray, x: np.ndarray, y: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Stable permutation sorting events by (t, y, x, polarity)."""
    return np.lexsort((p, x, y, t))


@dataclass
class EventStream:
    """Immutable ordered event stream over a fixed sensor geometry.

    Events are stored as parallel numpy arrays and re-sorted into the
    canonical (t, y, x, polarity) order on construction.
    """

    geometry: SensorGeometry
    t: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    x: np.ndarray = field(default_factory=lambda: np.empty(0, np.int32))
    y: np.ndarray = field(default_factory=lambda: np.empty(0, np.int32))
    p: np.ndarray = field(default_factory=lambda: np.empty(0, np.int8))

    def __post_init__(self):
        self.t = np.asarray(self.t, np.int64)
        self.x = np.asarray(self.x, np.int32)
        self.y = np.asarray(self.y, np.int32)
        self.p = np.asarray(self.p, np.int8)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event field arrays must have equal length")
        if n:
            if self.t.min() < 0:
                raise StreamFormatError("negative timestamp")
            if self.x.min() < 0 or self.x.max() >= self.geometry.width:
                raise StreamFormatError("x coordinate outside sensor geometry")
            if self.y.min() < 0 or self.y.max() >= self.geometry.height:
                raise StreamFormatError("y coordinate outside sensor geometry")
            if not np.all(np.isin(self.p, (1, -1))):
                raise StreamFormatError("polarity must be +-1")
            order = sort_order(self.t, self.x, self.y, self.p)
            self.t = np.ascontiguousarray(self.t[order])
            self.x = np.ascontiguousarray(self.x[order])
            self.y = np.ascontiguousarray(self.y[order])
            self.p = np.ascontiguousarray(self.p[order])

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self):
        for i in range(len(self.t)):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    @classmethod
    def from_events(cls, geometry: SensorGeometry, events) -> "EventStream":
        evs = list(events)
        return cls(
            geometry,
            np.array([e.t for e in evs], np.int64),
            np.array([e.x for e in evs], np.int32),
            np.array([e.y for e in evs], np.int32),
            np.array([e.polarity for e in evs], np.int8),
        )


def read_stream(source: bytes | str, format: str = "csv") -> EventStream:
    """Decode a stream from CSV text or the 16-byte-record binary format.

    Rejects malformed records (with line/offset), out-of-geometry
    coordinates and non-monotonic timestamps.
    """
    if format == "csv":
        return _read_csv(source.decode("ascii") if isinstance(source, bytes) else source)
    if format == "binary":
        if isinstance(source, str):
            raise TypeError("binary format requires bytes input")
        return _read_binary(source)
    raise ValueError(f"unknown format {format!r}")


def write_stream(stream: EventStream, format: str = "csv") -> bytes:
    """Encode a stream; read_stream(write_stream(s)) == s in both formats."""
    if format == "csv":
        lines = [f"{stream.geometry.width},{stream.geometry.height}"]
        for i in range(len(stream)):
            lines.append(f"{stream.x[i]},{stream.y[i]},{stream.t[i]},{stream.p[i]}")
        return ("\n".join(lines) + "\n").encode("ascii")
    if format == "binary":
        rec = np.zeros(len(stream), _RECORD_DTYPE)
        rec["t"] = stream.t
        rec["x"] = stream.x
        rec["y"] = stream.y
        rec["p"] = (stream.p == 1).astype(np.uint8)
        header = BINARY_MAGIC + struct.pack(
            "<HH", stream.geometry.width, stream.geometry.height
        )
        return header + rec.tobytes()
    raise ValueError(f"unknown format {format!r}")


def merge_streams(a: EventStream, b: EventStream) -> EventStream:
    """Union of two same-geometry streams, re-sorted into canonical order."""
    if a.geometry != b.geometry:
        raise ValueError(
            f"geometry mismatch: {a.geometry.width}x{a.geometry.height} "
            f"vs {b.geometry.width}x{b.geometry.height}"
        )
    return EventStream(
        a.geometry,
        np.concatenate([a.t, b.t]),
        np.concatenate([a.x, b.x]),
        np.concatenate([a.y, b.y]),
        np.concatenate([a.p, b.p]),
    )


def _read_csv(text: str) -> EventStream:
    lines = text.split("\n")
    if not lines or not lines[0].strip():
        raise StreamFormatError("missing geometry header line")
    try:
        m_str, n_str = lines[0].split(",")
        geom = SensorGeometry(int(m_str), int(n_str))
    except (ValueError, TypeError) as exc:
        raise StreamFormatError(f"line 1: bad geometry header {lines[0]!r}") from exc
    xs, ys, ts, ps = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise StreamFormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            x, y, t, p = (int(v) for v in parts)
        except ValueError as exc:
            raise StreamFormatError(f"line {lineno}: non-integer field in {line!r}") from exc
        if not (0 <= x < geom.width and 0 <= y < geom.height):
            raise StreamFormatError(
                f"line {lineno}: coordinate ({x},{y}) outside {geom.width}x{geom.height}"
            )
        if p not in (1, -1):
            raise StreamFormatError(f"line {lineno}: polarity must be 1 or -1, got {p}")
        if ts and t < ts[-1]:
            raise StreamFormatError(f"line {lineno}: non-monotonic timestamp {t} < {ts[-1]}")
        xs.append(x)
        ys.append(y)
        ts.append(t)
        ps.append(p)
    return EventStream(
        geom,
        np.array(ts, np.int64),
        np.array(xs, np.int32),
        np.array(ys, np.int32),
        np.array(ps, np.int8),
    )


def _read_binary(data: bytes) -> EventStream:
    if len(data) < 12:
        raise StreamFormatError("truncated header")
    if data[:8] != BINARY_MAGIC:
        raise StreamFormatError(f"bad magic {data[:8]!r}")
    m, n = struct.unpack("<HH", data[8:12])
    geom = SensorGeometry(m, n)
    body = data[12:]
    if len(body) % _RECORD_DTYPE.itemsize:
        raise StreamFormatError(
            f"body length {len(body)} not a multiple of {_RECORD_DTYPE.itemsize} "
            f"(offset {12 + len(body)})"
        )
    rec = np.frombuffer(body, _RECORD_DTYPE)
    t = rec["t"].astype(np.int64)
    x = rec["x"].astype(np.int32)
    y = rec["y"].astype(np.int32)
    p = np.where(rec["p"] > 0, 1, -1).astype(np.int8)
    if len(t) and np.any(np.diff(t) < 0):
        bad = int(np.argmax(np.diff(t) < 0)) + 1
        raise StreamFormatError(f"record {bad}: non-monotonic timestamp")
    if len(x) and (x.max() >= m or y.max() >= n):
        bad = int(np.argmax((x >= m) | (y >= n)))
        raise StreamFormatError(f"record {bad}: coordinate outside {m}x{n}")
    return EventStream(geom, t, x, y, p)
