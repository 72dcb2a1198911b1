"""Time-bucket x system density heat map, queue placement and anchor release."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .metrics import DisjointPartition

EPS_RELEASE = 0.01
DEFAULT_PEAK_QUANTILE = 0.9


@dataclass(frozen=True, eq=False)
class HeatMap:
    systems: tuple[str, ...]
    density: np.ndarray  # (buckets, systems), int64
    peak_mask: np.ndarray  # (buckets, systems), bool
    bucket_width: float

    def __post_init__(self):
        shape = (self.density.shape[0], len(self.systems))
        if self.density.shape != shape or self.peak_mask.shape != shape:
            raise ValueError("density/peak_mask shape does not match systems")
        self.density.setflags(write=False)
        self.peak_mask.setflags(write=False)

    @property
    def buckets(self) -> int:
        return self.density.shape[0]

    def column(self, system_id: str) -> np.ndarray:
        return self.density[:, self.systems.index(system_id)]

    def __eq__(self, other):
        if not isinstance(other, HeatMap):
            return NotImplemented
        return (
            self.systems == other.systems
            and self.bucket_width == other.bucket_width
            and np.array_equal(self.density, other.density)
            and np.array_equal(self.peak_mask, other.peak_mask)
        )

    def to_dict(self) -> dict:
        return {
            "systems": list(self.systems),
            "buckets": self.buckets,
            "bucket_width": self.bucket_width,
            "density": self.density.tolist(),
            "peak_mask": self.peak_mask.tolist(),
        }


@dataclass(frozen=True)
class PlacementPoint:
    boundary_index: int
    bucket_index: int
    anchored: bool = True

    def to_dict(self) -> dict:
        return {
            "boundary_index": self.boundary_index,
            "bucket_index": self.bucket_index,
            "anchored": self.anchored,
        }


@dataclass(frozen=True)
class Anchor:
    group_index: int
    released: bool = False


def build_heatmap(trace, bucket_width: float, system_order=None) -> HeatMap:
    """Count trace items per system in half-open buckets ``[b*w, (b+1)*w)``.

    ``trace`` is any iterable of ``(timestamp, system_id, item_count)``.
    Without ``system_order`` the systems are the sorted ids seen in the trace.
    """
    if not bucket_width > 0:
        raise ValueError("bucket_width must be > 0")
    events = list(trace)
    if system_order is None:
        system_order = sorted({e[1] for e in events})
    systems = tuple(system_order)
    index = {s: i for i, s in enumerate(systems)}
    if len(index) != len(systems):
        raise ValueError("duplicate system ids in system_order")
    if not events:
        empty = np.zeros((0, len(systems)), dtype=np.int64)
        return HeatMap(systems, empty, empty.astype(bool), float(bucket_width))

    times = np.empty(len(events), dtype=np.float64)
    sys_idx = np.empty(len(events), dtype=np.int64)
    counts = np.empty(len(events), dtype=np.int64)
    for i, (t, s, c) in enumerate(events):
        if t < 0:
            raise ValueError(f"negative timestamp {t}")
        if s not in index:
            raise ValueError(f"system {s!r} not in system_order")
        times[i] = t
        sys_idx[i] = index[s]
        counts[i] = c
    n_buckets = math.floor(times.max() / bucket_width) + 1
    density = kernels.bucket_counts(
        times, sys_idx, counts, float(bucket_width), n_buckets, len(systems)
    )
    return HeatMap(systems, density, np.zeros(density.shape, dtype=bool), float(bucket_width))


def overlay_peak_demand(hm: HeatMap, demand, quantile: float = DEFAULT_PEAK_QUANTILE) -> HeatMap:
    """Mark cells whose demand reaches the per-system quantile threshold.

    The threshold is the linearly interpolated quantile of the system's demand
    column; a cell is a peak when its demand is at or above it.
    """
    demand = np.asarray(demand, dtype=np.float64)
    if demand.shape != hm.density.shape:
        raise ValueError(f"demand shape {demand.shape} != heat map shape {hm.density.shape}")
    if not 0 < quantile <= 1:
        raise ValueError("quantile must be in (0, 1]")
    mask = np.zeros(demand.shape, dtype=bool)
    if hm.buckets:
        thresholds = np.quantile(demand, quantile, axis=0)
        # interpolation between equal values may land one ulp off the value
        mask = demand >= thresholds - 1e-12 * np.maximum(1.0, np.abs(thresholds))
    return replace(hm, peak_mask=mask)


def boundary_profiles(hm: HeatMap, part: DisjointPartition) -> np.ndarray:
    """Per-bucket density summed over the two groups adjacent to each boundary.

    Returns shape ``(k - 1, buckets)``. Systems absent from the map add 0.
    """
    if part.k < 2:
        raise ValueError("placement needs at least two groups")
    group_cols = []
    for group in part.sets:
        cols = [hm.systems.index(s.system_id) for s in group if s.system_id in hm.systems]
        group_cols.append(hm.density[:, cols].sum(axis=1) if cols else np.zeros(hm.buckets, dtype=np.int64))
    return np.array([group_cols[b] + group_cols[b + 1] for b in range(part.k - 1)])


def choose_boundary(totals) -> int:
    """Index of the largest boundary total; ties go to the lowest index."""
    return int(np.argmax(np.asarray(totals)))


def select_queue_position(hm: HeatMap, part: DisjointPartition) -> PlacementPoint:
    if part.k < 2:
        raise ValueError("placement needs at least two groups")
    if hm.buckets < 1:
        raise ValueError("placement needs a heat map with at least one bucket")
    profiles = boundary_profiles(hm, part)
    boundary = choose_boundary(profiles.sum(axis=1))
    bucket = int(np.argmax(profiles[boundary]))
    return PlacementPoint(boundary, bucket, True)


def check_release(anchor: Anchor, ratio: float, eps: float = EPS_RELEASE) -> Anchor:
    """Release once the utilization ratio reaches 1 (within ``eps``) or passes it."""
    if anchor.released:
        return anchor
    if abs(ratio - 1.0) <= eps or ratio > 1.0:
        return replace(anchor, released=True)
    return anchor


def export_heatmap(hm: HeatMap, fmt: str = "csv") -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bucket", *hm.systems])
        for b in range(hm.buckets):
            writer.writerow([b, *(int(v) for v in hm.density[b])])
        return buf.getvalue().encode()
    if fmt == "ppm":
        return _encode_ppm(hm)
    raise ValueError(f"unknown heat map format {fmt!r}")


def _encode_ppm(hm: HeatMap) -> bytes:
    # grey = round-half-up(255 * d / max); peak cells get a full red channel
    height, width = hm.density.shape
    header = f"P6\n{width} {height}\n255\n".encode()
    peak = int(hm.density.max()) if hm.density.size else 0
    if peak > 0:
        grey = (hm.density.astype(np.int64) * 255 * 2 + peak) // (2 * peak)
    else:
        grey = np.zeros(hm.density.shape, dtype=np.int64)
    rgb = np.repeat(grey[:, :, None], 3, axis=2).astype(np.uint8)
    rgb[hm.peak_mask, 0] = 255
    return header + rgb.tobytes()


def read_heatmap_csv(data: bytes | str, bucket_width: float = 1.0) -> HeatMap:
    """Inverse of the CSV export (peak mask is not part of the CSV)."""
    text = data.decode() if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["bucket"]:
        raise ValueError("heat map CSV must start with a 'bucket' header")
    systems = tuple(rows[0][1:])
    body = rows[1:]
    for i, row in enumerate(body):
        if int(row[0]) != i:
            raise ValueError(f"bucket rows out of order at row {i}")
    density = np.array([[int(v) for v in row[1:]] for row in body], dtype=np.int64).reshape(
        len(body), len(systems)
    )
    return HeatMap(systems, density, np.zeros(density.shape, dtype=bool), float(bucket_width))
