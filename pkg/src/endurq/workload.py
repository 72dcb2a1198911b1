"""Event traces and seeded workload generators."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

KINDS = ("poisson", "bursty", "sparse", "replay")


@dataclass(frozen=True)
class EventTrace:
    events: tuple[tuple[float, str, int], ...] = ()

    def __post_init__(self):
        last = 0.0
        for t, _, count in self.events:
            if t < last:
                raise ValueError("trace timestamps must be non-decreasing and >= 0")
            if count < 1:
                raise ValueError("item counts must be >= 1")
            last = t

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def item_count(self) -> int:
        return sum(c for _, _, c in self.events)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["timestamp", "system_id", "item_count"])
        for t, s, c in self.events:
            writer.writerow([repr(float(t)), s, c])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EventTrace":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None:
            return cls(())
        if [h.strip() for h in header] != ["timestamp", "system_id", "item_count"]:
            raise ValueError("trace CSV header must be timestamp,system_id,item_count")
        events = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                events.append((float(row[0]), row[1], int(row[2])))
            except (IndexError, ValueError) as exc:
                raise ValueError(f"trace CSV line {line_no}: {exc}") from exc
        return cls(tuple(sorted(events, key=lambda e: e[0])))


@dataclass(frozen=True)
class WorkloadProfile:
    """Arrival process description.

    ``poisson``: ``rate``. ``bursty``: ``base_rate``, ``burst_rate``,
    ``burst_duration``, ``period``; each period opens with the burst.
    ``sparse``: arrivals every ``1/rate`` seconds during ``active``-second
    stretches separated by ``gap`` idle seconds (``active`` defaults to
    ``gap``; ``gap=0`` gives a plain deterministic stream). ``replay``:
    ``trace`` verbatim.
    """

    kind: str
    duration: float
    seed: int = 0
    rate: Optional[float] = None
    base_rate: Optional[float] = None
    burst_rate: Optional[float] = None
    burst_duration: Optional[float] = None
    period: Optional[float] = None
    gap: Optional[float] = None
    active: Optional[float] = None
    trace: Optional[EventTrace] = None
    system_id: str = "source"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown workload kind {self.kind!r}")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        need = {
            "poisson": ("rate",),
            "bursty": ("base_rate", "burst_rate", "burst_duration", "period"),
            "sparse": ("rate", "gap"),
            "replay": (),
        }[self.kind]
        for name in need:
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"{self.kind} workload needs {name}")
        for name in ("rate", "base_rate", "burst_rate", "burst_duration", "period"):
            value = getattr(self, name)
            if name in need and not value > 0:
                raise ValueError(f"{name} must be > 0")
        if self.kind == "bursty" and self.burst_duration > self.period:
            raise ValueError("burst_duration must not exceed period")
        if self.kind == "sparse":
            if self.gap < 0:
                raise ValueError("gap must be >= 0")
            if self.active is not None and not self.active > 0:
                raise ValueError("active must be > 0")
        if self.kind == "replay" and self.trace is None:
            raise ValueError("replay workload needs a trace")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "duration": self.duration, "seed": self.seed}
        for name in ("rate", "base_rate", "burst_rate", "burst_duration", "period", "gap", "active"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.kind == "replay":
            out["events"] = len(self.trace)
        return out


def generate_workload(profile: WorkloadProfile) -> EventTrace:
    if profile.kind == "replay":
        return profile.trace
    rng = np.random.default_rng(profile.seed)
    sid = profile.system_id
    if profile.kind == "poisson":
        times = _poisson(rng, profile.rate, profile.duration)
    elif profile.kind == "bursty":
        times = _bursty(rng, profile)
    else:
        times = _sparse(profile)
    return EventTrace(tuple((t, sid, 1) for t in times))


def _poisson(rng, rate, duration):
    out = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rate)
        if t >= duration:
            return out
        out.append(t)


def _bursty(rng, p: WorkloadProfile):
    # piecewise-constant rate; on crossing a phase edge the clock restarts
    # there, which is exact for exponential inter-arrivals
    out = []
    cycle, in_burst, t = 0, True, 0.0
    while t < p.duration:
        start = cycle * p.period
        edge = start + (p.burst_duration if in_burst else p.period)
        rate = p.burst_rate if in_burst else p.base_rate
        if edge > t:
            nxt = t + rng.exponential(1.0 / rate)
            if nxt < edge:
                t = nxt
                if t < p.duration:
                    out.append(t)
                continue
        t = max(t, edge)
        if in_burst and p.burst_duration < p.period:
            in_burst = False
        else:
            cycle += 1
            in_burst = True
            t = max(t, cycle * p.period)
    return out


def _sparse(p: WorkloadProfile):
    spacing = 1.0 / p.rate
    if p.gap == 0 and p.active is None:
        n = int(np.ceil(p.duration * p.rate))
        return [i * spacing for i in range(n) if i * spacing < p.duration]
    active = p.active if p.active is not None else p.gap
    cycle_len = active + p.gap
    out = []
    c = 0
    while c * cycle_len < p.duration:
        i = 0
        while i * spacing < active:
            t = c * cycle_len + i * spacing
            if t >= p.duration:
                break
            out.append(t)
            i += 1
        c += 1
    return out
