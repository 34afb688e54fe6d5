"""Cyclic master/slave bus simulation on a single virtual clock.

One managing node polls each controlled node once per fixed-length cycle,
in configured order; request and response transmission times follow the
wire rate and each node adds its processing delay. The schedule is fully
deterministic, which makes latency and jitter exact functions of the
configuration. No frame encodings or arbitration: the bus is modeled as
an ideal isochronous transport.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import mean
from typing import Callable

US_PER_S = 1_000_000


class BusConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NodeConfig:
    node_id: str
    request_bytes: int = 64
    response_bytes: int = 64
    processing_delay_us: float = 50.0


@dataclass(frozen=True)
class BusConfig:
    cycle_time_us: int = 1000
    wire_rate_bps: float = 100e6
    nodes: tuple[NodeConfig, ...] = (
        # servo before camera so a report picked up in cycle k is delivered
        # as a command within cycle k+1
        NodeConfig("servo"),
        NodeConfig("camera", response_bytes=128),
        NodeConfig("io"),
    )
    overflow_policy: str = "drop"  # or "extend"
    strict: bool = True  # False permits over-budget configs (to study overflow)

    def __post_init__(self):
        if self.cycle_time_us <= 0:
            raise BusConfigError("cycle_time must be > 0")
        if self.overflow_policy not in ("drop", "extend"):
            raise BusConfigError(f"unknown overflow policy {self.overflow_policy!r}")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise BusConfigError("duplicate node ids")
        if self.strict and self.slot_budget_us() > self.cycle_time_us:
            raise BusConfigError(
                f"slot budget {self.slot_budget_us():.1f} us exceeds cycle "
                f"{self.cycle_time_us} us"
            )

    def tx_time_us(self, nbytes: int) -> float:
        return nbytes * 8 * US_PER_S / self.wire_rate_bps

    def slot_budget_us(self) -> float:
        return sum(
            self.tx_time_us(n.request_bytes) + n.processing_delay_us
            + self.tx_time_us(n.response_bytes)
            for n in self.nodes
        )


@dataclass
class Exchange:
    node_id: str
    request: object
    response: object
    req_start_us: float
    req_end_us: float  # request fully delivered at the CN
    resp_start_us: float
    resp_end_us: float  # response fully delivered at the MN


@dataclass
class BusCycle:
    index: int
    start_us: float
    exchanges: list[Exchange] = field(default_factory=list)
    overflow: bool = False


@dataclass(frozen=True)
class CameraReport:
    """Position estimate (sensor px) from the event camera node."""

    x: int | None = None
    y: int | None = None
    t_us: int | None = None
    support: int = 0
    events_seen: int = 0

    def wire_size(self) -> int:
        return 24


@dataclass(frozen=True)
class ServoCommand:
    xi_deg: float
    sigma_deg: float

    def wire_size(self) -> int:
        return 16


@dataclass(frozen=True)
class ServoStatus:
    xi_deg: float
    sigma_deg: float

    def wire_size(self) -> int:
        return 16


@dataclass(frozen=True)
class IoCommand:
    valve_pattern: int  # one bit per solenoid valve
    light_on: bool = True

    def wire_size(self) -> int:
        return 2


@dataclass(frozen=True)
class FilterConfig:
    """LDSI + tracker parameter download to the camera node."""

    ldsi: object
    tracker: object

    def wire_size(self) -> int:
        return 48


@dataclass(frozen=True)
class ModeSelect:
    mode: str  # "event" or "frame"

    def wire_size(self) -> int:
        return 1


def check_payload_fits(payload, budget_bytes: int) -> None:
    size = payload.wire_size() if payload is not None else 0
    if size > budget_bytes:
        raise BusConfigError(
            f"{type(payload).__name__} ({size} B) exceeds byte budget {budget_bytes}"
        )


# MN behavior: (cycle index, {node: last response}) -> {node: request payload}
MnBehavior = Callable[[int, dict], dict]
# CN behavior: (cycle index, request payload) -> response payload
CnBehavior = Callable[[int, object], object]


def run_bus(config: BusConfig, mn_behavior: MnBehavior,
            cn_behaviors: dict[str, CnBehavior], duration_us: int) -> list[BusCycle]:
    """Simulate cycles until `duration_us` of virtual time has elapsed."""
    cycles: list[BusCycle] = []
    last_responses: dict[str, object] = {n.node_id: None for n in config.nodes}
    start = 0.0
    k = 0
    while start < duration_us:
        cycle = BusCycle(k, start)
        requests = mn_behavior(k, dict(last_responses))
        cursor = start
        deadline = start + config.cycle_time_us
        for node in config.nodes:
            req = requests.get(node.node_id)
            req_start = cursor
            req_end = req_start + config.tx_time_us(node.request_bytes)
            behavior = cn_behaviors.get(node.node_id)
            resp = behavior(k, req) if behavior else None
            resp_start = req_end + node.processing_delay_us
            resp_end = resp_start + config.tx_time_us(node.response_bytes)
            if resp_end > deadline:
                cycle.overflow = True
                if config.overflow_policy == "drop":
                    break
            cycle.exchanges.append(
                Exchange(node.node_id, req, resp, req_start, req_end, resp_start, resp_end)
            )
            last_responses[node.node_id] = resp
            cursor = resp_end
        cycles.append(cycle)
        if config.overflow_policy == "extend" and cycle.overflow:
            start = max(start + config.cycle_time_us, cursor)
        else:
            start = start + config.cycle_time_us
        k += 1
    return cycles


@dataclass(frozen=True)
class LatencyStats:
    count: int
    min_us: float
    mean_us: float
    max_us: float
    jitter_us: float  # max - min
    max_cycles: float

    @staticmethod
    def empty() -> "LatencyStats":
        return LatencyStats(0, 0.0, 0.0, 0.0, 0.0, 0.0)


def latency_report(cycles: list[BusCycle], injection_times_us: list[float],
                   config: BusConfig, camera_node: str = "camera",
                   servo_node: str = "servo") -> LatencyStats:
    """Camera-to-servo latency for each injected position-change time.

    A position available at time t is captured by the first camera poll
    whose request arrives at or after t, and delivered to the servo with
    the next cycle's servo request.
    """
    cam_polls = []  # (req_start, cycle index)
    servo_delivery = {}  # cycle index -> request end at servo
    for cycle in cycles:
        for ex in cycle.exchanges:
            if ex.node_id == camera_node:
                cam_polls.append((ex.req_start_us, cycle.index))
            elif ex.node_id == servo_node:
                servo_delivery[cycle.index] = ex.req_end_us
    latencies = []
    for t in injection_times_us:
        pick = next((c for (req_t, c) in cam_polls if req_t >= t), None)
        if pick is None or pick + 1 not in servo_delivery:
            continue
        latencies.append(servo_delivery[pick + 1] - t)
    if not latencies:
        return LatencyStats.empty()
    return LatencyStats(
        len(latencies), min(latencies), mean(latencies), max(latencies),
        max(latencies) - min(latencies),
        max(latencies) / config.cycle_time_us,
    )


def cycle_log_csv(cycles: list[BusCycle]) -> str:
    lines = ["cycle,node,req_t,resp_t,payload_kind,payload_bytes"]
    for cycle in cycles:
        for ex in cycle.exchanges:
            kind = type(ex.response).__name__ if ex.response is not None else "none"
            nbytes = getattr(ex.response, "wire_size", lambda: 0)()
            lines.append(
                f"{cycle.index},{ex.node_id},{ex.req_start_us:.3f},"
                f"{ex.resp_end_us:.3f},{kind},{nbytes}"
            )
    return "\n".join(lines) + "\n"


def bus_from_dict(tree: dict) -> BusConfig:
    defaults = BusConfig()
    nodes = defaults.nodes
    if "nodes" in tree:
        nodes = tuple(
            NodeConfig(
                n["id"], int(n.get("request_bytes", 64)),
                int(n.get("response_bytes", 64)),
                float(n.get("processing_delay_us", 50.0)),
            )
            for n in tree["nodes"]
        )
    return BusConfig(
        cycle_time_us=int(tree.get("cycle_time_us", defaults.cycle_time_us)),
        wire_rate_bps=float(tree.get("wire_rate_bps", defaults.wire_rate_bps)),
        nodes=nodes,
        overflow_policy=str(tree.get("overflow_policy", defaults.overflow_policy)),
    )
