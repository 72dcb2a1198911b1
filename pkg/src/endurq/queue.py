"""The endurance queue: a bounded FIFO whose depth only ever grows.

Concurrency: one producer (``enqueue``) and one consumer (``dequeue``) may run
on different threads. ``apply_growth`` and ``migrate`` belong to the monitor
and must be called between event-processing steps; every mutation takes the
same lock, so decisions are serialized against both parties.
"""

from __future__ import annotations

import csv
import enum
import io
import threading
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from .growth import Decision
from .heatmap import Anchor, PlacementPoint


class MigrationError(RuntimeError):
    pass


class EnqueueResult(enum.Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"


@dataclass(frozen=True)
class WorkItem:
    id: int
    arrival_time: float
    source_system: str = ""
    size: int = 1

    def __post_init__(self):
        if self.arrival_time < 0:
            raise ValueError("arrival_time must be >= 0")


@dataclass
class QueueStats:
    enqueued: int = 0
    dequeued: int = 0
    dropped: int = 0
    migrations: int = 0
    max_depth_seen: int = 1
    depth_timeline: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "enqueued": self.enqueued,
            "dequeued": self.dequeued,
            "dropped": self.dropped,
            "migrations": self.migrations,
            "max_depth_seen": self.max_depth_seen,
        }

    def timeline_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", "depth"])
        writer.writerows(self.depth_timeline)
        return buf.getvalue()


class EnduranceQueue:
    def __init__(self, cap: int, placement: Optional[PlacementPoint] = None):
        if cap < 1:
            raise ValueError("cap must be >= 1")
        self.cap = cap
        self.depth = 1
        self.placement = placement if placement is not None else PlacementPoint(0, 0, True)
        self.items: deque[WorkItem] = deque()
        self.stats = QueueStats()
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.items)

    # "enqueued" counts attempts, so that enqueued = dequeued + dropped + len
    def enqueue(self, item: WorkItem) -> EnqueueResult:
        with self._lock:
            self.stats.enqueued += 1
            if len(self.items) < self.depth:
                self.items.append(item)
                return EnqueueResult.ACCEPTED
            self.stats.dropped += 1
            return EnqueueResult.DROPPED

    def dequeue(self) -> Optional[WorkItem]:
        with self._lock:
            if not self.items:
                return None
            self.stats.dequeued += 1
            return self.items.popleft()

    def apply_growth(self, d: Decision) -> "EnduranceQueue":
        if d.kind == "grow":
            with self._lock:
                target = min(d.to, self.cap)
                self.depth = max(self.depth, target, len(self.items), 1)
                self.stats.max_depth_seen = max(self.stats.max_depth_seen, self.depth)
        elif d.kind == "migrate":
            raise MigrationError("migrate decisions need a placement; call migrate()")
        return self

    def migrate(self, new_placement: PlacementPoint, anchor: Anchor, reset_depth: bool = False) -> "EnduranceQueue":
        if not anchor.released:
            raise MigrationError("anchor has not been released")
        with self._lock:
            self.placement = new_placement
            self.stats.migrations += 1
            if reset_depth:
                # buffered items are kept, so the depth cannot drop below them
                self.depth = max(1, len(self.items))
        return self

    def snapshot(self, now: float) -> QueueStats:
        with self._lock:
            self.stats.depth_timeline.append((now, self.depth))
            return replace(self.stats, depth_timeline=list(self.stats.depth_timeline))


def new_queue(cap: int, placement: Optional[PlacementPoint] = None) -> EnduranceQueue:
    return EnduranceQueue(cap, placement)
