"""Shared helpers for the test suite."""

import numpy as np

from ldsitrack.events import EventStream, SensorGeometry
from ldsitrack.ldsi import LdsiParams


def random_stream(rng: np.random.Generator, geom: SensorGeometry,
                  n: int, t_max: int = 1_000_000) -> EventStream:
    t = np.sort(rng.integers(0, t_max, n)).astype(np.int64)
    x = rng.integers(0, geom.width, n).astype(np.int32)
    y = rng.integers(0, geom.height, n).astype(np.int32)
    p = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    order = np.lexsort((p, x, y, t))
    return EventStream(geom, t[order], x[order], y[order], p[order])


def random_params(rng: np.random.Generator) -> LdsiParams:
    return LdsiParams(
        erco=float(rng.uniform(0.5, 10)),
        ercn=float(rng.uniform(0, 10)),
        ernc=float(rng.uniform(0, 10)),
        tce=float(rng.uniform(1, 10)),
        tne=float(rng.uniform(1, 10)),
        mtr_us=int(rng.integers(100, 50_000)),
        derp=float(rng.uniform(0, 10)),
        derc=float(rng.uniform(0, 10)),
        dl=int(rng.integers(0, 4)),
        per_polarity=bool(rng.random() < 0.3),
        single_step_decay=bool(rng.random() < 0.3),
    )
