"""Vicinity-vote tracker: ball position from windows of consecutive events.

Every `window` consecutive events (20 by default) are scored: each event
counts the other events of its window within a Chebyshev radius, the
event with the most neighbours wins, ties go to the latest event (then to
stream order). The winner's pixel is the position estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ldsitrack.events import EventStream


@dataclass(frozen=True)
class TrackerParams:
    window: int = 20  # events per estimate
    vicinity_radius: int = 3  # Chebyshev, px
    stride: int | None = None  # None = non-overlapping windows

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.vicinity_radius < 0:
            raise ValueError("vicinity_radius must be >= 0")
        if self.stride is not None and self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(frozen=True)
class PositionEstimate:
    x: int
    y: int
    t: int  # timestamp of the deciding event, us
    support: int  # vicinity count of the winner


def _window_winner(x: np.ndarray, y: np.ndarray, t: np.ndarray,
                   radius: int) -> tuple[int, int]:
    dx = np.abs(x[:, None] - x[None, :])
    dy = np.abs(y[:, None] - y[None, :])
    near = np.maximum(dx, dy) <= radius
    counts = near.sum(axis=1) - 1  # exclude self
    best = np.flatnonzero(counts == counts.max())
    # ties: latest timestamp wins, then latest stream position
    winner = best[np.lexsort((best, t[best]))[-1]]
    return int(winner), int(counts[winner])


def track_window(events: EventStream, params: TrackerParams) -> PositionEstimate:
    """Estimate from exactly `window` events in stream order."""
    if len(events) != params.window:
        raise ValueError(f"expected {params.window} events, got {len(events)}")
    i, support = _window_winner(
        events.x.astype(np.int64), events.y.astype(np.int64), events.t,
        params.vicinity_radius,
    )
    return PositionEstimate(int(events.x[i]), int(events.y[i]), int(events.t[i]), support)


def track_window_reference(events: EventStream, params: TrackerParams) -> PositionEstimate:
    """Brute-force O(window^2) oracle with explicit loops."""
    if len(events) != params.window:
        raise ValueError(f"expected {params.window} events, got {len(events)}")
    n = len(events)
    best = None
    for i in range(n):
        count = 0
        for j in range(n):
            if i == j:
                continue
            if max(abs(int(events.x[i]) - int(events.x[j])),
                   abs(int(events.y[i]) - int(events.y[j]))) <= params.vicinity_radius:
                count += 1
        key = (count, int(events.t[i]), i)
        if best is None or key > best[0]:
            best = (key, i)
    _, i = best
    return PositionEstimate(
        int(events.x[i]), int(events.y[i]), int(events.t[i]), best[0][0]
    )


def track_stream(stream: EventStream, params: TrackerParams) -> list[PositionEstimate]:
    """One estimate per window; a trailing partial window yields none."""
    stride = params.stride or params.window
    estimates = []
    xs = stream.x.astype(np.int64)
    ys = stream.y.astype(np.int64)
    start = 0
    while start + params.window <= len(stream):
        sl = slice(start, start + params.window)
        i, support = _window_winner(xs[sl], ys[sl], stream.t[sl], params.vicinity_radius)
        i += start
        estimates.append(
            PositionEstimate(int(stream.x[i]), int(stream.y[i]), int(stream.t[i]), support)
        )
        start += stride
    return estimates


def estimates_csv(estimates: list[PositionEstimate]) -> str:
    lines = ["t,x,y,support"]
    for e in estimates:
        lines.append(f"{e.t},{e.x},{e.y},{e.support}")
    return "\n".join(lines) + "\n"
