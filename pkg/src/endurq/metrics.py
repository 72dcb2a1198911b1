"""Per-system metrics, capacity scores and capacity-ordered partitions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field


class DomainError(ValueError):
    """Raised when an input violates a metric's domain (e.g. a zero divisor)."""


@dataclass(frozen=True)
class SystemMetrics:
    system_id: str
    p: float
    u: float
    D: float
    dt: float
    S: float
    window: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise DomainError(f"{self.system_id}: utilization {self.u} outside [0, 1]")
        for name in ("p", "D", "dt", "S"):
            if getattr(self, name) < 0:
                raise DomainError(f"{self.system_id}: {name} must be >= 0")
        start, end = self.window
        if not end > start:
            raise DomainError(f"{self.system_id}: empty window {self.window}")

    def to_dict(self) -> dict:
        return {
            "system_id": self.system_id,
            "p": self.p,
            "u": self.u,
            "D": self.D,
            "dt": self.dt,
            "S": self.S,
            "window": list(self.window),
        }


@dataclass(frozen=True)
class StackTotals:
    P: float
    U: float
    D_total: float

    def __post_init__(self):
        if not (self.P > 0 and self.U > 0 and self.D_total > 0):
            raise DomainError(f"stack totals must be strictly positive: {self}")
        if self.U > 1:
            raise DomainError(f"stack utilization {self.U} exceeds 1")


@dataclass(frozen=True)
class CapacityScore:
    system_id: str
    c: float

    def to_dict(self) -> dict:
        return {"system_id": self.system_id, "c": self.c}


@dataclass(frozen=True)
class DisjointPartition:
    sets: tuple[tuple[CapacityScore, ...], ...]
    # boundary i is degenerate when sup(group i) == inf(group i+1)
    degenerate_boundaries: tuple[int, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.sets)

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_boundaries)

    def group_of(self, system_id: str) -> int:
        for i, group in enumerate(self.sets):
            if any(s.system_id == system_id for s in group):
                return i
        raise KeyError(system_id)

    def to_dict(self) -> dict:
        return {
            "sets": [[s.to_dict() for s in group] for group in self.sets],
            "k": self.k,
            "degenerate": self.degenerate,
        }


def compute_capacity(m: SystemMetrics, t: StackTotals) -> CapacityScore:
    """Capacity score: (p/P)(u/U) + (dt/D_total) S."""
    if t.P == 0 or t.U == 0 or t.D_total == 0:
        raise DomainError("stack totals are divisors and must be non-zero")
    c = (m.p / t.P * (m.u / t.U)) + (m.dt / t.D_total * m.S)
    return CapacityScore(m.system_id, c)


def aggregate_stack(systems: list[SystemMetrics]) -> StackTotals:
    """Sum throughput and demand, average utilization over the stack."""
    if not systems:
        raise DomainError("cannot aggregate an empty stack")
    P = sum(m.p for m in systems)
    U = min(sum(m.u for m in systems) / len(systems), 1.0)
    D_total = sum(m.D for m in systems)
    if U <= 0:
        raise DomainError("stack utilization is zero")
    if P <= 0:
        raise DomainError("stack throughput is zero")
    if D_total <= 0:
        raise DomainError("stack service demand is zero")
    return StackTotals(P, U, D_total)


def partition_systems(scores: list[CapacityScore], k: int) -> DisjointPartition:
    """Sort scores ascending and cut them into ``k`` contiguous groups.

    Group sizes differ by at most one, larger groups first. Ties in ``c`` are
    ordered by ``system_id``. A boundary whose two sides share the same value
    is recorded as degenerate instead of rejected.
    """
    if not 1 <= k <= len(scores):
        raise ValueError(f"k={k} out of range for {len(scores)} systems")
    ordered = sorted(scores, key=lambda s: (s.c, s.system_id))
    base, extra = divmod(len(ordered), k)
    sets = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        sets.append(tuple(ordered[start:start + size]))
        start += size
    degenerate = tuple(
        i for i in range(k - 1) if sets[i][-1].c >= sets[i + 1][0].c
    )
    return DisjointPartition(tuple(sets), degenerate)


def utilization_ratio(group: list[SystemMetrics], t: StackTotals) -> float:
    if not group:
        raise DomainError("empty group")
    return sum(m.u for m in group) / len(group) / t.U


def capacity_ratio(score: CapacityScore, scores: list[CapacityScore]) -> float:
    """r = C_i / C with C the summed capacity of the stack (0 when C is 0)."""
    total = sum(s.c for s in scores)
    return score.c / total if total > 0 else 0.0


METRICS_CSV_FIELDS = ("system_id", "p", "u", "D", "dt", "S")


def read_metrics_csv(text: str) -> list[SystemMetrics]:
    """Parse ``system_id,p,u,D,dt,S[,window_start,window_end]`` rows."""
    reader = csv.DictReader(io.StringIO(text))
    missing = [f for f in METRICS_CSV_FIELDS if f not in (reader.fieldnames or [])]
    if missing:
        raise DomainError(f"metrics CSV missing columns: {', '.join(missing)}")
    rows = []
    for line_no, row in enumerate(reader, start=2):
        try:
            window = (0.0, 1.0)
            if row.get("window_start") and row.get("window_end"):
                window = (float(row["window_start"]), float(row["window_end"]))
            rows.append(
                SystemMetrics(
                    row["system_id"],
                    float(row["p"]),
                    float(row["u"]),
                    float(row["D"]),
                    float(row["dt"]),
                    float(row["S"]),
                    window,
                )
            )
        except (TypeError, ValueError) as exc:
            raise DomainError(f"line {line_no}: {exc}") from exc
    return rows
