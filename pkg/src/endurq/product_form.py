"""Product-form state probabilities for multiprogrammed upstreams.

G(N) is built with the convolution fold, one station at a time, so no state
is ever enumerated on the production path; ``enumerate_states`` exists as the
brute-force check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

DEFAULT_THETA = 2.0


@dataclass(frozen=True, eq=False)
class ProductFormModel:
    demands: tuple[float, ...]
    N: int
    g: np.ndarray

    def __post_init__(self):
        if not self.demands:
            raise ValueError("at least one station is required")
        if self.g.shape != (self.N + 1,):
            raise ValueError("g must hold G(0..N)")


@dataclass(frozen=True)
class SpawnPlan:
    target_station: int
    thread_count: int
    zeroed_station: int

    def to_dict(self) -> dict:
        return {
            "target_station": self.target_station,
            "thread_count": self.thread_count,
            "zeroed_station": self.zeroed_station,
        }


def _check_demands(demands) -> tuple[float, ...]:
    ds = tuple(float(d) for d in demands)
    if not ds:
        raise ValueError("at least one station is required")
    for d in ds:
        if not d > 0 or not math.isfinite(d):
            raise ValueError(f"service demands must be positive, got {d}")
    return ds


def normalizing_constant(demands, N: int) -> np.ndarray:
    """G(0..N) for the given per-station demands."""
    ds = _check_demands(demands)
    if N < 0:
        raise ValueError("population must be >= 0")
    return kernels.convolve(np.asarray(ds, dtype=np.float64), int(N))


def build_model(demands, N: int) -> ProductFormModel:
    ds = _check_demands(demands)
    g = normalizing_constant(ds, N)
    g.setflags(write=False)
    return ProductFormModel(ds, int(N), g)


def state_probability(model: ProductFormModel, counts) -> float:
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(model.demands):
        raise ValueError("state length differs from station count")
    if any(c < 0 for c in counts) or sum(counts) != model.N:
        raise ValueError(f"state {counts} does not have population {model.N}")
    weight = 1.0
    for d, c in zip(model.demands, counts):
        weight *= d**c
    return weight / float(model.g[model.N])


def enumerate_states(stations: int, N: int) -> list[tuple[int, ...]]:
    """All compositions of N into ``stations`` non-negative parts, lexicographic."""
    if stations < 1 or N < 0:
        raise ValueError("need stations >= 1 and N >= 0")
    if stations == 1:
        return [(N,)]
    out = []
    for first in range(N + 1):
        for rest in enumerate_states(stations - 1, N - first):
            out.append((first, *rest))
    return out


def dominates(q_gi: float, q_gj: float, theta: float = DEFAULT_THETA) -> bool:
    """True when ``q_gj`` is at least ``theta`` times a non-zero ``q_gi``."""
    if not theta > 1:
        raise ValueError("theta must be > 1")
    return q_gi > 0 and q_gj >= theta * q_gi


def spawn_threads(prob: float, q_gi: float, triggered: bool = True) -> int:
    """round-half-up(prob * q_gi), at least 1 for a triggered, non-zero product."""
    if not 0 <= prob <= 1:
        raise ValueError("probability must lie in [0, 1]")
    if q_gi < 0:
        raise ValueError("growth value must be >= 0")
    x = prob * q_gi
    n = math.floor(x + 0.5)
    if triggered and 0 < x < 1:
        n = 1
    return int(n)


def scale_to_population(values, N: int) -> tuple[int, ...]:
    """Scale ``values`` to integers summing to N (largest-remainder rounding)."""
    vals = [float(v) for v in values]
    total = sum(vals)
    if total <= 0:
        vals = [1.0] * len(vals)
        total = float(len(vals))
    exact = [v * N / total for v in vals]
    base = [math.floor(x) for x in exact]
    short = N - sum(base)
    # ties in the remainder go to the lower station index
    order = sorted(range(len(vals)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return tuple(base)


def apply_multiprogram(d_m: int, growth_values, demands, theta: float = DEFAULT_THETA) -> list[SpawnPlan]:
    """Spawn plans for every dominated station at multiprogramming degree ``d_m``.

    The observed growth vector is scaled to population ``d_m`` and its
    product-form probability sets the thread count. A station that is itself
    dominated is drained, so it is never chosen as a spawn target.
    """
    if d_m < 1:
        raise ValueError("degree of multiprogramming must be >= 1")
    growth = [float(v) for v in growth_values]
    if len(growth) != len(demands):
        raise ValueError("growth values and demands are not aligned by station")
    model = build_model(demands, d_m)
    prob = state_probability(model, scale_to_population(growth, d_m))
    m = len(growth)
    dominated = [any(dominates(growth[i], growth[j], theta) for j in range(m)) for i in range(m)]
    plans = []
    for i in range(m):
        for j in range(m):
            if i != j and not dominated[j] and dominates(growth[i], growth[j], theta):
                plans.append(SpawnPlan(j, spawn_threads(prob, growth[i]), i))
    return plans
