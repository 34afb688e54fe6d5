"""LDSI filter: four-layer event network with excitation, thresholds, decay.

Sensor events feed a (M-2)x(N-2) core layer ("Dlayer"): each event adds
ERCO to its unit's potential; at threshold TCE the unit fires, resets, and
excites the second (M-2)x(N-2) layer ("Alayer"): ERCN at the same unit,
ERNC at every unit within Chebyshev distance 1..DL. Alayer units crossing
TNE reset and emit output events at the original sensor coordinates.
Potentials decay lazily: when a unit is next touched after DT > MTR it
loses DERP (Dlayer) or DERC (Alayer) per elapsed MTR interval, clamped at
zero. Border pixels are discarded, so no output ever appears on the
sensor border.

The optimized path runs through a numba kernel when available; a naive
whole-array-per-event reference (`filter_stream_reference`) is kept as an
independent oracle for equivalence tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ldsitrack.events import Event, EventStream, SensorGeometry, sort_order

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    numba = None
    _HAVE_NUMBA = False

MS = 1_000  # us per ms

_RANGED = ("erco", "ercn", "ernc", "tce", "tne", "derp", "derc")


@dataclass(frozen=True)
class LdsiParams:
    erco: float = 5.0  # Dlayer increment per sensor event
    ercn: float = 5.0  # same-unit Alayer increment per Dlayer firing
    ernc: float = 2.0  # neighbour Alayer increment per Dlayer firing
    tce: float = 8.0  # Dlayer firing threshold
    tne: float = 8.0  # Alayer firing threshold
    mtr_us: int = 20 * MS  # max time to remember before decay applies
    derp: float = 10.0  # Dlayer decay decrement per elapsed MTR
    derc: float = 10.0  # Alayer decay decrement per elapsed MTR
    dl: int = 1  # neighbourhood radius (Chebyshev)
    per_polarity: bool = False  # separate potential maps per polarity
    single_step_decay: bool = False  # decay once instead of per MTR interval

    def __post_init__(self):
        for name in _RANGED:
            v = getattr(self, name)
            if not 0 <= v <= 10:
                raise ValueError(f"{name}={v} outside validated range [0, 10]")
        if self.mtr_us <= 0:
            raise ValueError("mtr_us must be > 0")
        if self.dl < 0:
            raise ValueError("dl must be >= 0")

    def with_updates(self, **kwargs) -> "LdsiParams":
        return replace(self, **kwargs)


# Filter strength presets; the low/medium/high progression trades data
# reduction against how much scene structure survives. Config, not law.
PRESETS: dict[str, LdsiParams] = {
    "low": LdsiParams(tce=6.0, tne=6.0, mtr_us=50 * MS),
    "medium": LdsiParams(tce=8.0, tne=8.0, mtr_us=20 * MS),
    "high": LdsiParams(tce=10.0, tne=10.0, mtr_us=10 * MS),
}


def params_from_dict(tree: dict) -> LdsiParams:
    base = PRESETS[tree["preset"]] if "preset" in tree else LdsiParams()
    fields = {}
    mapping = {
        "ERCO": "erco", "ERCN": "ercn", "ERNC": "ernc", "TCE": "tce",
        "TNE": "tne", "MTR_ms": None, "DERP": "derp", "DERC": "derc", "DL": "dl",
    }
    for key, attr in mapping.items():
        if key in tree:
            if key == "MTR_ms":
                fields["mtr_us"] = int(float(tree[key]) * MS)
            else:
                fields[attr] = int(tree[key]) if attr == "dl" else float(tree[key])
    if "mtr_us" in tree:
        fields["mtr_us"] = int(tree["mtr_us"])
    for flag in ("per_polarity", "single_step_decay"):
        if flag in tree:
            fields[flag] = bool(tree[flag])
    return base.with_updates(**fields) if fields else base


class LdsiState:
    """Per-unit potentials and last-touch timestamps of Dlayer and Alayer."""

    def __init__(self, geometry: SensorGeometry, params: LdsiParams):
        self.geometry = geometry
        channels = 2 if params.per_polarity else 1
        shape = (channels, geometry.height - 2, geometry.width - 2)
        self.d_potential = np.zeros(shape)
        self.d_last_t = np.zeros(shape, np.int64)
        self.a_potential = np.zeros(shape)
        self.a_last_t = np.zeros(shape, np.int64)
        self.last_event_t = 0


def _decay(potential: float, last_t: int, now: int, decrement: float,
           mtr: int, single_step: bool) -> float:
    dt = now - last_t
    if dt > mtr:
        steps = 1 if single_step else dt // mtr
        potential = max(0.0, potential - decrement * steps)
    return potential


def ldsi_step(state: LdsiState, params: LdsiParams, ev: Event) -> list[Event]:
    """Process one event, mutating state; returns emitted output events.

    Events must arrive in non-decreasing timestamp order. Border events
    are dropped. Output events carry the triggering event's timestamp and
    polarity, sorted in the global stream order.
    """
    geom = state.geometry
    if not (0 <= ev.x < geom.width and 0 <= ev.y < geom.height):
        raise ValueError(f"event ({ev.x},{ev.y}) outside {geom.width}x{geom.height}")
    if ev.t < state.last_event_t:
        raise ValueError(f"timestamp regression: {ev.t} < {state.last_event_t}")
    state.last_event_t = ev.t
    if ev.x in (0, geom.width - 1) or ev.y in (0, geom.height - 1):
        return []
    c = (1 if ev.polarity == 1 else 0) if params.per_polarity else 0
    ux, uy = ev.x - 1, ev.y - 1
    d_pot = state.d_potential[c]
    d_last = state.d_last_t[c]
    a_pot = state.a_potential[c]
    a_last = state.a_last_t[c]
    d_pot[uy, ux] = _decay(
        d_pot[uy, ux], d_last[uy, ux], ev.t, params.derp, params.mtr_us,
        params.single_step_decay,
    )
    d_last[uy, ux] = ev.t
    d_pot[uy, ux] += params.erco
    out: list[Event] = []
    if d_pot[uy, ux] >= params.tce:
        d_pot[uy, ux] = 0.0
        h, w = d_pot.shape
        for vy in range(max(0, uy - params.dl), min(h - 1, uy + params.dl) + 1):
            for vx in range(max(0, ux - params.dl), min(w - 1, ux + params.dl) + 1):
                a_pot[vy, vx] = _decay(
                    a_pot[vy, vx], a_last[vy, vx], ev.t, params.derc,
                    params.mtr_us, params.single_step_decay,
                )
                a_last[vy, vx] = ev.t
                a_pot[vy, vx] += params.ercn if (vy == uy and vx == ux) else params.ernc
                if a_pot[vy, vx] >= params.tne:
                    a_pot[vy, vx] = 0.0
                    out.append(Event(vx + 1, vy + 1, ev.t, ev.polarity))
    # row-major emission already matches the (t, y, x, polarity) order
    return out


def _filter_python(stream: EventStream, params: LdsiParams) -> EventStream:
    state = LdsiState(stream.geometry, params)
    ot, ox, oy, op = [], [], [], []
    for ev in stream:
        for o in ldsi_step(state, params, ev):
            ot.append(o.t)
            ox.append(o.x)
            oy.append(o.y)
            op.append(o.polarity)
    return EventStream(
        stream.geometry,
        np.array(ot, np.int64), np.array(ox, np.int32),
        np.array(oy, np.int32), np.array(op, np.int8),
    )


def _kernel(t, x, y, p, chan, w, h, erco, ercn, ernc, tce, tne, mtr, derp, derc,
            dl, single_step, d_pot, d_last, a_pot, a_last, ot, ox, oy, op):
    n_out = 0
    cap = ot.shape[0]
    iw = w - 2
    ih = h - 2
    for i in range(t.shape[0]):
        xi = x[i]
        yi = y[i]
        if xi == 0 or xi == w - 1 or yi == 0 or yi == h - 1:
            continue
        ti = t[i]
        ci = chan[i]
        ux = xi - 1
        uy = yi - 1
        dt = ti - d_last[ci, uy, ux]
        if dt > mtr:
            steps = 1 if single_step else dt // mtr
            v = d_pot[ci, uy, ux] - derp * steps
            d_pot[ci, uy, ux] = v if v > 0.0 else 0.0
        d_last[ci, uy, ux] = ti
        d_pot[ci, uy, ux] += erco
        if d_pot[ci, uy, ux] >= tce:
            d_pot[ci, uy, ux] = 0.0
            y0 = uy - dl if uy - dl > 0 else 0
            y1 = uy + dl if uy + dl < ih - 1 else ih - 1
            x0 = ux - dl if ux - dl > 0 else 0
            x1 = ux + dl if ux + dl < iw - 1 else iw - 1
            for vy in range(y0, y1 + 1):
                for vx in range(x0, x1 + 1):
                    dt2 = ti - a_last[ci, vy, vx]
                    if dt2 > mtr:
                        steps = 1 if single_step else dt2 // mtr
                        v = a_pot[ci, vy, vx] - derc * steps
                        a_pot[ci, vy, vx] = v if v > 0.0 else 0.0
                    a_last[ci, vy, vx] = ti
                    if vy == uy and vx == ux:
                        a_pot[ci, vy, vx] += ercn
                    else:
                        a_pot[ci, vy, vx] += ernc
                    if a_pot[ci, vy, vx] >= tne:
                        a_pot[ci, vy, vx] = 0.0
                        if n_out >= cap:
                            return -1
                        ot[n_out] = ti
                        ox[n_out] = vx + 1
                        oy[n_out] = vy + 1
                        op[n_out] = p[i]
                        n_out += 1
    return n_out


if _HAVE_NUMBA:
    _kernel_fast = numba.njit(cache=True)(_kernel)


def filter_stream(stream: EventStream, params: LdsiParams,
                  state: LdsiState | None = None) -> EventStream:
    """Fold the LDSI step over a whole stream from a zero state.

    Passing `state` continues filtering from a previous call (used by the
    live pipeline); batch results are identical to folding `ldsi_step`.
    """
    if not _HAVE_NUMBA:
        if state is not None:
            return _filter_incremental_python(stream, params, state)
        return _filter_python(stream, params)
    if state is None:
        state = LdsiState(stream.geometry, params)
    if params.per_polarity:
        chan = (stream.p == 1).astype(np.int64)
    else:
        chan = np.zeros(len(stream), np.int64)
    cap = max(1024, 4 * len(stream))
    while True:
        ot = np.empty(cap, np.int64)
        ox = np.empty(cap, np.int32)
        oy = np.empty(cap, np.int32)
        op = np.empty(cap, np.int8)
        d_pot = state.d_potential.copy()
        d_last = state.d_last_t.copy()
        a_pot = state.a_potential.copy()
        a_last = state.a_last_t.copy()
        n = _kernel_fast(
            stream.t, stream.x, stream.y, stream.p, chan,
            stream.geometry.width, stream.geometry.height,
            float(params.erco), float(params.ercn), float(params.ernc),
            float(params.tce), float(params.tne), np.int64(params.mtr_us),
            float(params.derp), float(params.derc), int(params.dl),
            params.single_step_decay, d_pot, d_last, a_pot, a_last,
            ot, ox, oy, op,
        )
        if n >= 0:
            break
        cap *= 4
    state.d_potential = d_pot
    state.d_last_t = d_last
    state.a_potential = a_pot
    state.a_last_t = a_last
    if len(stream):
        state.last_event_t = int(stream.t[-1])
    return EventStream(stream.geometry, ot[:n], ox[:n], oy[:n], op[:n])


def _filter_incremental_python(stream, params, state):
    ot, ox, oy, op = [], [], [], []
    for ev in stream:
        for o in ldsi_step(state, params, ev):
            ot.append(o.t)
            ox.append(o.x)
            oy.append(o.y)
            op.append(o.polarity)
    return EventStream(
        stream.geometry,
        np.array(ot, np.int64), np.array(ox, np.int32),
        np.array(oy, np.int32), np.array(op, np.int8),
    )


def filter_stream_reference(stream: EventStream, params: LdsiParams) -> EventStream:
    """Naive reference: scans the full inner grids for every event.

    O(M*N) per event, pure Python; intended for small sensors as the
    independent oracle against the optimized implementation.
    """
    geom = stream.geometry
    channels = 2 if params.per_polarity else 1
    ih, iw = geom.height - 2, geom.width - 2
    d_pot = [[[0.0] * iw for _ in range(ih)] for _ in range(channels)]
    d_last = [[[0] * iw for _ in range(ih)] for _ in range(channels)]
    a_pot = [[[0.0] * iw for _ in range(ih)] for _ in range(channels)]
    a_last = [[[0] * iw for _ in range(ih)] for _ in range(channels)]
    out = []
    for ev in stream:
        if ev.x in (0, geom.width - 1) or ev.y in (0, geom.height - 1):
            continue
        c = (1 if ev.polarity == 1 else 0) if params.per_polarity else 0
        ux, uy = ev.x - 1, ev.y - 1
        fired = False
        # full-array scan: visit every Dlayer unit, act only on the target
        for ry in range(ih):
            for rx in range(iw):
                if ry != uy or rx != ux:
                    continue
                d_pot[c][ry][rx] = _decay(
                    d_pot[c][ry][rx], d_last[c][ry][rx], ev.t, params.derp,
                    params.mtr_us, params.single_step_decay,
                )
                d_last[c][ry][rx] = ev.t
                d_pot[c][ry][rx] += params.erco
                if d_pot[c][ry][rx] >= params.tce:
                    d_pot[c][ry][rx] = 0.0
                    fired = True
        if not fired:
            continue
        for ry in range(ih):
            for rx in range(iw):
                if max(abs(ry - uy), abs(rx - ux)) > params.dl:
                    continue
                a_pot[c][ry][rx] = _decay(
                    a_pot[c][ry][rx], a_last[c][ry][rx], ev.t, params.derc,
                    params.mtr_us, params.single_step_decay,
                )
                a_last[c][ry][rx] = ev.t
                if ry == uy and rx == ux:
                    a_pot[c][ry][rx] += params.ercn
                else:
                    a_pot[c][ry][rx] += params.ernc
                if a_pot[c][ry][rx] >= params.tne:
                    a_pot[c][ry][rx] = 0.0
                    out.append((ev.t, rx + 1, ry + 1, ev.polarity))
    return EventStream(
        geom,
        np.array([o[0] for o in out], np.int64),
        np.array([o[1] for o in out], np.int32),
        np.array([o[2] for o in out], np.int32),
        np.array([o[3] for o in out], np.int8),
    )


@dataclass(frozen=True)
class MetricsRecord:
    input_count: int
    output_count: int
    reduction_ratio: float  # 1 - out/in
    signal_retention: float  # per-ms truth positions covered by an output event
    noise_pass_through: float  # off-ball outputs per noise input event


def filter_metrics(input_stream: EventStream, output_stream: EventStream,
                   is_signal: np.ndarray, truth_t: np.ndarray,
                   truth_x: np.ndarray, truth_y: np.ndarray,
                   ball_radius: float) -> MetricsRecord:
    """Quantify reduction vs information kept for a tagged scene.

    Retention: fraction of per-ms ground-truth samples with at least one
    output event within the ball radius and within +-1 ms. Pass-through:
    output events farther than radius+2 px from the ball at their own
    timestamp, relative to the number of noise events in the input.
    """
    if len(is_signal) != len(input_stream):
        raise ValueError(
            f"tag/stream length mismatch: {len(is_signal)} vs {len(input_stream)}"
        )
    n_in = len(input_stream)
    n_out = len(output_stream)
    reduction = 1.0 - (n_out / n_in) if n_in else 0.0
    covered = 0
    considered = 0
    for i in range(len(truth_t)):
        tt = int(truth_t[i])
        lo = np.searchsorted(output_stream.t, tt - MS)
        hi = np.searchsorted(output_stream.t, tt + MS, side="right")
        considered += 1
        if lo < hi:
            dx = output_stream.x[lo:hi] - truth_x[i]
            dy = output_stream.y[lo:hi] - truth_y[i]
            if np.any(dx * dx + dy * dy <= ball_radius * ball_radius):
                covered += 1
    retention = covered / considered if considered else 0.0
    if n_out:
        ex = np.interp(output_stream.t, truth_t, truth_x)
        ey = np.interp(output_stream.t, truth_t, truth_y)
        off = np.hypot(output_stream.x - ex, output_stream.y - ey) > ball_radius + 2
        n_noise_in = int(np.sum(~np.asarray(is_signal, bool)))
        pass_through = float(np.sum(off)) / max(1, n_noise_in)
    else:
        pass_through = 0.0
    return MetricsRecord(n_in, n_out, reduction, retention, pass_through)
