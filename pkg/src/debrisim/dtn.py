"""Store-and-forward network simulator for the Primary-Relay-Ground chain.

Event-driven core with a total deterministic event order. Link capacity
is a stepped rate ladder driven by SNR; SNR comes either from a periodic
parametric profile with scheduled outage windows or from free-space path
loss over supplied trajectories. Rates are piecewise-constant on a fixed
sampling grid; a transmission spans grid segments and makes no progress
where the rate is zero.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

PRIORITIES = ("safety-critical", "metadata", "bulk")
_PRIO_INDEX = {p: i for i, p in enumerate(PRIORITIES)}
OUTAGE_SNR_DB = -99.0


@dataclass
class Bundle:
    """One unit of DTN traffic with its custody timestamps."""

    id: int
    size_b: int
    priority: str
    source: str
    destination: str
    created_s: float
    delivered_s: float | None = None
    hops: int = 0
    dropped: str | None = None   # drop reason, None while alive

    def __post_init__(self):
        if self.size_b <= 0:
            raise ValueError("bundle size must be positive")
        if self.priority not in _PRIO_INDEX:
            raise ValueError(f"unknown priority {self.priority!r}")

    @property
    def latency_s(self) -> float | None:
        if self.delivered_s is None:
            return None
        return self.delivered_s - self.created_s


@dataclass(frozen=True)
class LinkModel:
    """Directed link with an SNR source and a stepped SNR-to-rate ladder.

    Parametric mode: snr = mean + amplitude*sin(2*pi*t/period), forced to
    ``outage_snr_db`` inside scheduled outage windows. Geometry mode:
    snr = tx_power + gains - (20*log10(d_km) + fspl_const) - noise_floor,
    with Earth-occluded geometry treated as an outage.
    """

    name: str
    src: str
    dst: str
    rate_table: tuple[tuple[float, float], ...]
    mode: str = "parametric"
    mean_db: float = 20.0
    amplitude_db: float = 0.0
    period_s: float = 6000.0
    outages: tuple[tuple[float, float], ...] = ()
    outage_snr_db: float = OUTAGE_SNR_DB
    tx_power_dbw: float = 10.0
    gain_db: float = 40.0
    fspl_const_db: float = 32.45
    noise_floor_dbw: float = -120.0
    earth_radius_km: float = 6378.137

    def __post_init__(self):
        if self.mode not in ("parametric", "geometry"):
            raise ValueError(f"unknown link mode {self.mode!r}")
        if self.period_s <= 0:
            raise ValueError("period must be positive")
        if not self.rate_table:
            raise ValueError("rate table must not be empty")
        last_snr, last_rate = -math.inf, 0.0
        for snr, rate in self.rate_table:
            if snr <= last_snr or rate <= last_rate:
                raise ValueError("rate table must increase strictly in SNR and rate")
            last_snr, last_rate = snr, rate


def _los_clear(a: np.ndarray, b: np.ndarray, radius_km: float) -> bool:
    """True when the segment between two positions misses the Earth sphere."""
    d = b - a
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return True
    t = -float(np.dot(a, d)) / dd
    t = min(1.0, max(0.0, t))
    closest = a + t * d
    return float(np.linalg.norm(closest)) >= radius_km


def snr_at(link: LinkModel, t: float, geometry=None) -> float:
    """Link SNR in dB at scenario time t.

    ``geometry`` is a pair of callables t -> position (km) required by
    geometry-mode links.
    """
    if t < 0:
        raise ValueError("snr_at: t must be non-negative")
    if link.mode == "geometry":
        if geometry is None:
            raise ValueError(f"link {link.name}: geometry mode needs trajectories")
        pa = np.asarray(geometry[0](t), dtype=float)
        pb = np.asarray(geometry[1](t), dtype=float)
        if not _los_clear(pa, pb, link.earth_radius_km):
            return link.outage_snr_db
        d_km = max(float(np.linalg.norm(pb - pa)), 1e-6)
        fspl = 20.0 * math.log10(d_km) + link.fspl_const_db
        return link.tx_power_dbw + link.gain_db - fspl - link.noise_floor_dbw
    for start, end in link.outages:
        if start <= t < end:
            return link.outage_snr_db
    return link.mean_db + link.amplitude_db * math.sin(2.0 * math.pi * t / link.period_s)


def rate_from_snr(snr_db: float, link: LinkModel) -> float:
    """Bytes per second supported at the given SNR; 0 below the ladder."""
    rate = 0.0
    for threshold, step_rate in link.rate_table:
        if snr_db >= threshold:
            rate = step_rate
        else:
            break
    return rate


@dataclass(frozen=True)
class TrafficClass:
    """Periodic or Poisson generator for one priority class."""

    priority: str
    size_b: int
    interval_s: float
    mode: str = "periodic"      # periodic | poisson (interval = mean)

    def __post_init__(self):
        if self.interval_s <= 0 or self.size_b <= 0:
            raise ValueError("traffic interval and size must be positive")
        if self.mode not in ("periodic", "poisson"):
            raise ValueError(f"unknown traffic mode {self.mode!r}")


@dataclass(frozen=True)
class TrafficModel:
    classes: tuple[TrafficClass, ...] = (
        TrafficClass("safety-critical", 100, 1.0),
        TrafficClass("metadata", 1000, 10.0),
        TrafficClass("bulk", 50000, 120.0),
    )
    source: str = "primary"
    destination: str = "ground"


@dataclass
class NodeBuffer:
    """Per-priority FIFO queues with exact byte backlog accounting."""

    node: str
    capacity_b: float = math.inf
    queues: list[list[Bundle]] = field(default_factory=lambda: [[], [], []])
    heads: list[int] = field(default_factory=lambda: [0, 0, 0])
    backlog_b: int = 0

    def enqueue(self, bundle: Bundle) -> bool:
        if self.backlog_b + bundle.size_b > self.capacity_b:
            return False
        self.queues[_PRIO_INDEX[bundle.priority]].append(bundle)
        self.backlog_b += bundle.size_b
        return True

    def dequeue(self) -> Bundle | None:
        """Pop the oldest bundle of the highest non-empty priority."""
        for i in range(len(self.queues)):
            q, h = self.queues[i], self.heads[i]
            if h < len(q):
                bundle = q[h]
                self.heads[i] += 1
                if self.heads[i] > 256:     # amortized queue compaction
                    del q[: self.heads[i]]
                    self.heads[i] = 0
                self.backlog_b -= bundle.size_b
                return bundle
        return None

    def waiting(self, priority_index: int) -> int:
        return len(self.queues[priority_index]) - self.heads[priority_index]


@dataclass
class DtnMetrics:
    """Per-bundle records plus the derived network series."""

    bundles: list[Bundle]
    backlog: dict[str, list[tuple[float, int]]]
    throughput: dict[str, np.ndarray]      # columns t, rate_Bps, snr_db
    tx_log: list[tuple[float, str, int, str, tuple[int, int, int]]]
    duration_s: float
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight_at_end: int = 0
    buffered_at_end: int = 0

    def delivered_within(self, window_s: float = 1.0) -> float:
        if not self.bundles:
            return 0.0
        hit = sum(1 for b in self.bundles
                  if b.latency_s is not None and b.latency_s <= window_s)
        return hit / len(self.bundles)

    def peak_backlog_b(self, node: str) -> int:
        series = self.backlog[node]
        return max((b for _, b in series), default=0)

    def latencies(self) -> np.ndarray:
        return np.array([b.latency_s for b in self.bundles if b.latency_s is not None])


def latency_cdf(bundles: list[Bundle]) -> list[tuple[float, float]]:
    """Step points (latency, cumulative fraction of all bundles delivered).

    The final fraction equals the delivered ratio, so it is 1.0 only when
    every bundle in the input was delivered.
    """
    total = len(bundles)
    lats = sorted(b.latency_s for b in bundles if b.latency_s is not None)
    if total == 0 or not lats:
        return []
    points: list[tuple[float, float]] = []
    count = 0
    for i, lat in enumerate(lats):
        count += 1
        if i + 1 == len(lats) or lats[i + 1] != lat:
            points.append((lat, count / total))
    return points


def backlog_series(metrics: DtnMetrics, node: str) -> np.ndarray:
    """Piecewise-constant backlog history of one node, columns (t_s, bytes)."""
    if node not in metrics.backlog:
        raise KeyError(f"unknown node {node!r}")
    return np.array(metrics.backlog[node], dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class Topology:
    """Primary -> Relay -> Ground chain with one directed link per hop."""

    nodes: tuple[str, ...]
    links: tuple[LinkModel, ...]
    buffer_capacity_b: float = math.inf

    def __post_init__(self):
        out = {l.src for l in self.links}
        for link in self.links:
            if link.src not in self.nodes or link.dst not in self.nodes:
                raise ValueError(f"link {link.name} references unknown node")
        hop = {l.src: l for l in self.links}
        if len(hop) != len(self.links):
            raise ValueError("topology must be a forwarding chain (one outgoing link per node)")
        seen = set()
        node = self.nodes[0]
        while node in hop:
            if node in seen:
                raise ValueError("topology contains a cycle")
            seen.add(node)
            node = hop[node].dst


def default_topology() -> Topology:
    """Fig-calibrated parametric chain used by the default scenario."""
    pr = LinkModel(
        name="primary-relay", src="primary", dst="relay",
        mean_db=20.5, amplitude_db=4.5, period_s=6000.0,
        outages=((9000.0, 10200.0),),
        rate_table=((16.0, 12000.0), (19.0, 24000.0), (21.0, 36000.0), (23.0, 48000.0)),
    )
    rg = LinkModel(
        name="relay-ground", src="relay", dst="ground",
        mean_db=34.0, amplitude_db=4.0, period_s=6000.0,
        outages=((2000.0, 2100.0), (5600.0, 5700.0), (13200.0, 13300.0),
                 (17200.0, 17300.0), (20600.0, 20700.0)),
        rate_table=((30.0, 35000.0), (33.0, 45000.0), (35.0, 55000.0), (37.0, 65000.0)),
    )
    return Topology(nodes=("primary", "relay", "ground"), links=(pr, rg))


# -- event-driven execution ---------------------------------------------------

_EV_ARRIVAL = 0   # bundle finished crossing a link
_EV_GEN = 1
_EV_RETRY = 2     # link waiting for the rate to come back up


def run_dtn(topology: Topology, traffic: TrafficModel, duration_s: float,
            seed: int = 0, grid_s: float = 10.0, geometries=None) -> DtnMetrics:
    """Execute the store-and-forward simulation over [0, duration].

    Events are totally ordered by (time, node index, bundle id, sequence),
    so identical inputs reproduce identical metrics. ``geometries`` maps
    geometry-mode link names to their trajectory pairs.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    node_index = {n: i for i, n in enumerate(topology.nodes)}
    rng = np.random.default_rng(seed)

    # piecewise-constant rate timelines on the sampling grid
    n_grid = int(math.ceil(duration_s / grid_s)) + 1
    grid_t = np.arange(n_grid) * grid_s
    rates: dict[str, np.ndarray] = {}
    throughput: dict[str, np.ndarray] = {}
    for link in topology.links:
        geom = (geometries or {}).get(link.name)
        snr = np.array([snr_at(link, float(t), geom) for t in grid_t])
        rate = np.array([rate_from_snr(float(s), link) for s in snr])
        rates[link.name] = rate
        throughput[link.name] = np.column_stack([grid_t, rate, snr])

    def finish_time(link_name: str, start: float, size_b: float) -> float | None:
        """Completion time walking the rate grid; None when past the horizon."""
        remaining = float(size_b)
        t = start
        k = int(t / grid_s)
        rate_arr = rates[link_name]
        while k < n_grid:
            seg_end = (k + 1) * grid_s
            r = rate_arr[k]
            if r > 0.0:
                cap = r * (seg_end - t)
                if cap >= remaining:
                    return t + remaining / r
                remaining -= cap
            t = seg_end
            k += 1
        return None

    def next_up(link_name: str, t: float) -> float | None:
        """Earliest grid time >= t with nonzero rate."""
        k = int(math.ceil(t / grid_s))
        rate_arr = rates[link_name]
        while k < n_grid:
            if rate_arr[k] > 0.0:
                return k * grid_s
            k += 1
        return None

    buffers = {n: NodeBuffer(n, topology.buffer_capacity_b) for n in topology.nodes}
    out_link = {l.src: l for l in topology.links}
    link_busy: dict[str, bool] = {l.name: False for l in topology.links}
    link_waiting: dict[str, bool] = {l.name: False for l in topology.links}

    bundles: list[Bundle] = []
    backlog: dict[str, list[tuple[float, int]]] = {n: [(0.0, 0)] for n in topology.nodes}
    tx_log: list[tuple[float, str, int, str, tuple[int, int, int]]] = []
    delivered = dropped = 0

    heap: list[tuple] = []
    seq = 0

    def push(t: float, kind: int, node: str, bundle_id: int, payload) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, node_index[node], bundle_id, seq, kind, node, payload))
        seq += 1

    def note_backlog(node: str, t: float) -> None:
        backlog[node].append((t, buffers[node].backlog_b))

    def try_start(link: LinkModel, t: float) -> None:
        nonlocal delivered
        name = link.name
        if link_busy[name] or link_waiting[name]:
            return
        buf = buffers[link.src]
        if buf.backlog_b == 0:
            return
        k = min(int(t / grid_s), n_grid - 1)
        if rates[name][k] <= 0.0:
            wake = next_up(name, t)
            if wake is not None:
                link_waiting[name] = True
                push(wake, _EV_RETRY, link.src, -1, name)
            return
        snapshot = (buf.waiting(0), buf.waiting(1), buf.waiting(2))
        bundle = buf.dequeue()
        note_backlog(link.src, t)
        done = finish_time(name, t, bundle.size_b)
        tx_log.append((t, name, bundle.id, bundle.priority, snapshot))
        link_busy[name] = True
        if done is None:
            return   # still crossing the link at the horizon
        push(done, _EV_ARRIVAL, link.dst, bundle.id, (name, bundle))

    def generate(t: float, cls: TrafficClass) -> None:
        nonlocal dropped
        bundle = Bundle(
            id=len(bundles), size_b=cls.size_b, priority=cls.priority,
            source=traffic.source, destination=traffic.destination, created_s=t,
        )
        bundles.append(bundle)
        buf = buffers[traffic.source]
        if not buf.enqueue(bundle):
            bundle.dropped = f"buffer-overflow at {traffic.source}"
            dropped += 1
            return
        note_backlog(traffic.source, t)
        link = out_link.get(traffic.source)
        if link is not None:
            try_start(link, t)

    for cls in traffic.classes:
        if cls.mode == "periodic":
            first = cls.interval_s
        else:
            first = float(rng.exponential(cls.interval_s))
        if first <= duration_s:
            push(first, _EV_GEN, traffic.source, -1, cls)

    while heap:
        t, _, _, _, kind, node, payload = heapq.heappop(heap)
        if t > duration_s:
            continue
        if kind == _EV_GEN:
            cls = payload
            generate(t, cls)
            nxt = t + (cls.interval_s if cls.mode == "periodic"
                       else float(rng.exponential(cls.interval_s)))
            if nxt <= duration_s:
                push(nxt, _EV_GEN, traffic.source, -1, cls)
        elif kind == _EV_RETRY:
            name = payload
            link_waiting[name] = False
            link = next(l for l in topology.links if l.name == name)
            try_start(link, t)
        else:  # _EV_ARRIVAL
            name, bundle = payload
            link = next(l for l in topology.links if l.name == name)
            link_busy[name] = False
            bundle.hops += 1
            if link.dst == bundle.destination:
                bundle.delivered_s = t
                delivered += 1
            else:
                buf = buffers[link.dst]
                if buf.enqueue(bundle):
                    note_backlog(link.dst, t)
                    nxt_link = out_link.get(link.dst)
                    if nxt_link is not None:
                        try_start(nxt_link, t)
                else:
                    bundle.dropped = f"buffer-overflow at {link.dst}"
                    dropped += 1
            try_start(link, t)

    for n in topology.nodes:
        backlog[n].append((duration_s, buffers[n].backlog_b))

    buffered = sum(buf.waiting(i) for buf in buffers.values() for i in range(3))
    busy_count = sum(1 for v in link_busy.values() if v)

    return DtnMetrics(
        bundles=bundles,
        backlog=backlog,
        throughput=throughput,
        tx_log=tx_log,
        duration_s=duration_s,
        generated=len(bundles),
        delivered=delivered,
        dropped=dropped,
        in_flight_at_end=busy_count,
        buffered_at_end=buffered,
    )
