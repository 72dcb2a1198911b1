"""Discrete-event tandem pipeline with an endurance queue at the placed boundary.

Items enter the first system and visit every system in order. Each system
runs ``d_m`` parallel virtual servers in front of an unbounded FIFO buffer,
except the guarded system, whose input buffer is the endurance queue.

A run has two passes over the same seeded arrivals. The probe pass covers the
warm-up window on an unbounded pipeline and supplies the metrics used for
capacity scores, partitioning and placement. The main pass replays the whole
workload with the queue installed from time zero.
"""

from __future__ import annotations

import bisect
import heapq
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import SimConfig
from .growth import MonitorConfig, Observation, init_monitor, monitor_step
from .heatmap import (
    Anchor,
    HeatMap,
    PlacementPoint,
    build_heatmap,
    overlay_peak_demand,
    select_queue_position,
)
from .metrics import (
    CapacityScore,
    DisjointPartition,
    DomainError,
    SystemMetrics,
    aggregate_stack,
    compute_capacity,
    partition_systems,
    utilization_ratio,
)
from .product_form import SpawnPlan, apply_multiprogram
from .queue import EnduranceQueue, EnqueueResult, QueueStats, WorkItem
from .workload import EventTrace, generate_workload

log = logging.getLogger(__name__)

_TICK, _DEPART, _ARRIVE = 0, 1, 2


class _Station:
    def __init__(self, spec, rng, bucket_width):
        self.id = spec.system_id
        self.servers = spec.d_m
        self.dist = spec.service
        self.rng = rng
        self.busy = 0
        self.buffer: deque = deque()
        self.queue: Optional[EnduranceQueue] = None
        self.arrivals: list[float] = []
        self.completions: list[float] = []
        self.completion_service: list[float] = []
        self.intervals: list[tuple[float, float]] = []
        self.w = bucket_width
        # per-bucket accumulators for the monitor
        self.b_arrivals: list[int] = []
        self.b_completions: list[int] = []
        self.b_busy: list[float] = []

    def _grow(self, b):
        while len(self.b_arrivals) <= b:
            self.b_arrivals.append(0)
            self.b_completions.append(0)
            self.b_busy.append(0.0)

    def draw_service(self) -> float:
        if self.dist.kind == "deterministic":
            return self.dist.mean
        return float(self.rng.exponential(self.dist.mean))

    def note_arrival(self, t):
        self.arrivals.append(t)
        b = math.floor(t / self.w)
        self._grow(b)
        self.b_arrivals[b] += 1

    def note_service(self, start, end):
        self.intervals.append((start, end))
        b0, b1 = math.floor(start / self.w), math.floor(end / self.w)
        self._grow(b1)
        for b in range(b0, b1 + 1):
            lo, hi = max(start, b * self.w), min(end, (b + 1) * self.w)
            if hi > lo:
                self.b_busy[b] += hi - lo

    def note_completion(self, t, service):
        self.completions.append(t)
        self.completion_service.append(service)
        b = math.floor(t / self.w)
        self._grow(b)
        self.b_completions[b] += 1

    def bucket(self, arr, b, default=0):
        return arr[b] if 0 <= b < len(arr) else default

    def waiting(self) -> int:
        return len(self.queue) if self.queue is not None else len(self.buffer)


class Engine:
    """Single-owner event loop. Not thread-safe; run one engine per thread."""

    def __init__(
        self,
        cfg: SimConfig,
        arrivals: EventTrace,
        until: float,
        guard: Optional[int] = None,
        queue: Optional[EnduranceQueue] = None,
        policy: str = "endurance",
        partition: Optional[DisjointPartition] = None,
        record_queue_log: bool = False,
    ):
        self.cfg = cfg
        self.until = until
        self.policy = policy
        self.partition = partition
        seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.systems))
        self.stations = [
            _Station(spec, np.random.default_rng(s), cfg.bucket_width)
            for spec, s in zip(cfg.systems, seeds)
        ]
        self.guard = guard
        self.queue = queue
        if guard is not None:
            self.stations[guard].queue = queue
        self.monitor_cfg = MonitorConfig(
            cap=cfg.cap, levels=cfg.demand_levels, d_max=cfg.demand_scale, growth_on=cfg.growth_on
        )
        anchor = Anchor(queue.placement.boundary_index) if queue is not None else Anchor(0)
        self.monitors = [init_monitor(anchor) for _ in self.stations]
        self.generated = 0
        self.dropped = 0
        self.drop_times: list[float] = []
        self.latencies: list[float] = []
        self.spawn_plans: list[SpawnPlan] = []
        self.spawn_windows = 0
        self.snapshots: list[tuple] = []
        self.record_queue_log = record_queue_log
        self.accepted_ids: list[int] = []
        self.served_ids: list[int] = []
        self._seq = 0
        self._heap: list = []
        for i, (t, sid, count) in enumerate(arrivals):
            if t <= until:
                for _ in range(count):
                    self._push(t, _ARRIVE, 0, None)
        n_ticks = math.floor(until / cfg.bucket_width + 1e-9)
        for k in range(1, n_ticks + 1):
            self._push(k * cfg.bucket_width, _TICK, -1, None)

    def _push(self, t, kind, station, payload):
        heapq.heappush(self._heap, (t, kind, self._seq, station, payload))
        self._seq += 1

    def run(self) -> "Engine":
        next_id = 0
        while self._heap:
            t, kind, _, s, payload = heapq.heappop(self._heap)
            if t > self.until:
                break
            if kind == _ARRIVE:
                item = WorkItem(next_id, t, self.stations[0].id)
                next_id += 1
                self.generated += 1
                self._arrive(0, item, t)
            elif kind == _DEPART:
                self._depart(s, payload, t)
            else:
                self._tick(t)
        return self

    def _start(self, i, item, t):
        st = self.stations[i]
        st.busy += 1
        service = st.draw_service()
        st.note_service(t, t + service)
        self._push(t + service, _DEPART, i, (item, service))

    def _arrive(self, i, item, t):
        st = self.stations[i]
        st.note_arrival(t)
        if st.queue is not None:
            # every arrival at the guarded system passes through the queue
            result = st.queue.enqueue(item)
            if result is EnqueueResult.DROPPED:
                self.dropped += 1
                self.drop_times.append(t)
                return
            if self.record_queue_log:
                self.accepted_ids.append(item.id)
            if st.busy < st.servers:
                self._start(i, self._take(st), t)
        elif st.busy < st.servers:
            self._start(i, item, t)
        else:
            st.buffer.append(item)

    def _take(self, st):
        item = st.queue.dequeue()
        if self.record_queue_log:
            self.served_ids.append(item.id)
        return item

    def _depart(self, i, payload, t):
        item, service = payload
        st = self.stations[i]
        st.busy -= 1
        st.note_completion(t, service)
        if i + 1 < len(self.stations):
            self._arrive(i + 1, item, t)
        else:
            self.latencies.append(t - item.arrival_time)
        if st.queue is not None:
            if len(st.queue):
                self._start(i, self._take(st), t)
        elif st.buffer:
            self._start(i, st.buffer.popleft(), t)

    def window_metrics(self, b: int) -> list[SystemMetrics]:
        w = self.cfg.bucket_width
        out = []
        for st in self.stations:
            busy = st.bucket(st.b_busy, b, 0.0)
            done = st.bucket(st.b_completions, b)
            out.append(
                SystemMetrics(
                    st.id,
                    p=done / w,
                    u=min(max(busy / (st.servers * w), 0.0), 1.0),
                    D=busy / done if done else 0.0,
                    dt=float(st.bucket(st.b_arrivals, b)),
                    S=busy / done if done else 0.0,
                    window=(b * w, (b + 1) * w),
                )
            )
        return out

    def _tick(self, t):
        w = self.cfg.bucket_width
        b = round(t / w) - 1
        wm = self.window_metrics(b)
        ratio = None
        if self.queue is not None and self.partition is not None:
            anchor_group = self.partition.sets[self.monitors[self.guard].anchor.group_index]
            members = [m for m in wm if any(s.system_id == m.system_id for s in anchor_group)]
            try:
                ratio = utilization_ratio(members, aggregate_stack(wm))
            except DomainError:
                ratio = None
        for i, st in enumerate(self.stations):
            obs = Observation(
                dt_i=float(st.bucket(st.b_arrivals, b - 1)),
                dt_next=wm[i].dt,
                D_s=wm[i].D,
                r=ratio if i == self.guard else None,
            )
            self.monitors[i], decision = monitor_step(self.monitors[i], obs, self.monitor_cfg)
            if i != self.guard or self.queue is None or self.policy != "endurance":
                continue
            if decision.kind == "grow":
                self.queue.apply_growth(decision)
            elif decision.kind == "migrate":
                self._migrate(t)
        if any(st.servers > 1 for st in self.stations):
            plans = apply_multiprogram(
                max(st.servers for st in self.stations),
                [max(m.Q_d, 1) for m in self.monitors],
                [st.dist.mean for st in self.stations],
                self.cfg.theta,
            )
            if plans:
                self.spawn_plans = plans
                self.spawn_windows += 1
        if self.queue is not None:
            snap = self.queue.snapshot(t)
            self.snapshots.append(
                (t, snap.enqueued, snap.dequeued, snap.dropped, len(self.queue), self.queue.depth)
            )

    def _migrate(self, t):
        state = self.monitors[self.guard]
        hm = build_heatmap(self.arrival_trace(until=t), self.cfg.bucket_width, [s.id for s in self.stations])
        placement = self.queue.placement
        if hm.buckets and self.partition is not None and self.partition.k >= 2:
            placement = select_queue_position(hm, self.partition)
        self.queue.migrate(placement, state.anchor, reset_depth=self.cfg.migrate_reset)
        self.monitors[self.guard] = replace(state, anchor=Anchor(placement.boundary_index))
        log.debug("t=%s queue migrated to %s", t, placement)

    def arrival_trace(self, until: Optional[float] = None) -> list[tuple[float, str, int]]:
        events = []
        for st in self.stations:
            times = st.arrivals if until is None else st.arrivals[: bisect.bisect_left(st.arrivals, until)]
            events.extend((a, st.id, 1) for a in times)
        events.sort(key=lambda e: e[0])
        return events

    def in_flight(self) -> int:
        return sum(st.busy + st.waiting() for st in self.stations)


def collect_metrics(engine: Engine, window: tuple[float, float]) -> list[SystemMetrics]:
    """Windowed p, u, D, dt, S for every system of ``engine``."""
    a, b = window
    span = b - a
    out = []
    for st in engine.stations:
        busy = sum(max(0.0, min(e, b) - max(s, a)) for s, e in st.intervals)
        lo, hi = bisect.bisect_left(st.completions, a), bisect.bisect_left(st.completions, b)
        done = hi - lo
        served = st.completion_service[lo:hi]
        arrived = bisect.bisect_left(st.arrivals, b) - bisect.bisect_left(st.arrivals, a)
        out.append(
            SystemMetrics(
                st.id,
                p=done / span,
                u=min(max(busy / (st.servers * span), 0.0), 1.0),
                D=busy / done if done else 0.0,
                dt=float(arrived),
                S=sum(served) / done if done else 0.0,
                window=(a, b),
            )
        )
    return out


@dataclass
class SimReport:
    policy: str
    per_system: list[SystemMetrics]
    capacities: list[CapacityScore]
    partition: Optional[DisjointPartition]
    placement: PlacementPoint
    guard_system: str
    heatmap: HeatMap
    queue_stats: QueueStats
    spawn_plans: list[SpawnPlan]
    spawn_windows: int
    generated: int
    completed: int
    dropped: int
    in_flight: int
    end_to_end_throughput: float
    mean_latency: float
    final_depth: int
    engine: Optional[Engine] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "per_system": [m.to_dict() for m in self.per_system],
            "capacities": [c.to_dict() for c in self.capacities],
            "partition": self.partition.to_dict() if self.partition else None,
            "placement": self.placement.to_dict(),
            "guard_system": self.guard_system,
            "heatmap": self.heatmap.to_dict(),
            "queue_stats": self.queue_stats.to_dict(),
            "final_depth": self.final_depth,
            "spawn_plans": [p.to_dict() for p in self.spawn_plans],
            "spawn_windows": self.spawn_windows,
            "generated": self.generated,
            "completed": self.completed,
            "dropped": self.dropped,
            "in_flight": self.in_flight,
            "end_to_end_throughput": self.end_to_end_throughput,
            "mean_latency": self.mean_latency,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class _Placement:
    capacities: list
    partition: Optional[DisjointPartition]
    placement: PlacementPoint
    guard: int


def _place(cfg: SimConfig, arrivals: EventTrace) -> _Placement:
    warm = cfg.duration * cfg.warmup_fraction
    probe = Engine(cfg, arrivals, until=warm).run()
    metrics = collect_metrics(probe, (0.0, warm))
    ids = [s.system_id for s in cfg.systems]
    try:
        totals = aggregate_stack(metrics)
    except DomainError as exc:
        log.info("warm-up saw no activity (%s); using the default placement", exc)
        return _Placement([], None, PlacementPoint(0, 0, True), 1)
    capacities = [compute_capacity(m, totals) for m in metrics]
    part = partition_systems(capacities, cfg.partition_k)
    hm = build_heatmap(probe.arrival_trace(), cfg.bucket_width, ids)
    if hm.buckets == 0:
        return _Placement(capacities, part, PlacementPoint(0, 0, True), 1)
    placement = select_queue_position(hm, part)
    guard = _guard_for(hm, part, placement, ids)
    return _Placement(capacities, part, placement, guard)


def _guard_for(hm: HeatMap, part: DisjointPartition, placement: PlacementPoint, ids: list[str]) -> int:
    """System the queue sits in front of.

    Among the two groups beside the chosen boundary, the densest system in the
    chosen bucket; ties go downstream. The pipeline entry is excluded because
    a queue between stages needs a stage upstream of it.
    """
    b = placement.boundary_index
    members = [s.system_id for g in part.sets[b : b + 2] for s in g]
    candidates = [ids.index(s) for s in members if ids.index(s) > 0]
    row = hm.density[placement.bucket_index]
    return max(candidates, key=lambda i: (int(row[i]), i))


def run_simulation(cfg: SimConfig, policy: str = "endurance", record_queue_log: bool = False) -> SimReport:
    """Run one arm. ``policy`` is ``endurance`` (monitor-driven) or ``fixed`` (depth 1)."""
    if policy not in ("endurance", "fixed"):
        raise ValueError(f"unknown policy {policy!r}")
    arrivals = generate_workload(cfg.workload)
    placed = _place(cfg, arrivals)
    queue = EnduranceQueue(cfg.cap, placed.placement)
    engine = Engine(
        cfg,
        arrivals,
        until=cfg.duration,
        guard=placed.guard,
        queue=queue,
        policy=policy,
        partition=placed.partition,
        record_queue_log=record_queue_log,
    ).run()

    ids = [s.system_id for s in cfg.systems]
    hm = build_heatmap(engine.arrival_trace(), cfg.bucket_width, ids)
    if hm.buckets:
        demand = np.zeros(hm.density.shape)
        for j, st in enumerate(engine.stations):
            for b in range(hm.buckets):
                done = st.bucket(st.b_completions, b)
                demand[b, j] = st.bucket(st.b_busy, b, 0.0) / done if done else 0.0
        hm = overlay_peak_demand(hm, demand, cfg.peak_quantile)

    completed = len(engine.latencies)
    return SimReport(
        policy=policy,
        per_system=collect_metrics(engine, (0.0, cfg.duration)),
        capacities=placed.capacities,
        partition=placed.partition,
        placement=queue.placement,
        guard_system=ids[placed.guard],
        heatmap=hm,
        queue_stats=replace(queue.stats, depth_timeline=list(queue.stats.depth_timeline)),
        spawn_plans=engine.spawn_plans,
        spawn_windows=engine.spawn_windows,
        generated=engine.generated,
        completed=completed,
        dropped=engine.dropped,
        in_flight=engine.in_flight(),
        end_to_end_throughput=completed / cfg.duration,
        mean_latency=sum(engine.latencies) / completed if completed else 0.0,
        final_depth=queue.depth,
        engine=engine,
    )


def compare_baseline(cfg: SimConfig) -> dict[str, SimReport]:
    """Same seeded workload through the endurance policy and a fixed depth-1 queue."""
    return {
        "endurance": run_simulation(cfg, "endurance"),
        "fixed": run_simulation(cfg, "fixed"),
    }
