"""Saturating Peter-Ackermann evaluation, reduction traces and the depth monitor."""

from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from . import kernels
from .heatmap import EPS_RELEASE, Anchor, check_release

DEFAULT_CAP = 2**20
DEFAULT_MAX_STEPS = 100_000


class SaturatingValue(NamedTuple):
    value: int
    saturated: bool = False

    @classmethod
    def of(cls, value: int, cap: int) -> "SaturatingValue":
        if value >= cap:
            # hitting the cap exactly is still exact, but indistinguishable downstream
            return cls(cap, value > cap)
        return cls(value, False)

    def __str__(self):
        return f"{self.value} saturated" if self.saturated else str(self.value)


def _closed_form(m: int, n: int, cap: int) -> tuple[int, bool]:
    if m == 0:
        v = n + 1
    elif m == 1:
        v = n + 2
    elif m == 2:
        v = 2 * n + 3
    else:
        if n + 3 > cap.bit_length() + 1:
            return cap, True
        v = 2 ** (n + 3) - 3
    return (cap, True) if v > cap else (v, False)


@functools.lru_cache(maxsize=4096)
def _ackermann(m: int, n: int, cap: int) -> tuple[int, bool]:
    if m == 0:
        v = n + 1
    elif m == 1:
        v = n + 2
    elif m == 2:
        v = 2 * n + 3
    elif m == 3:
        # 2**(n+3) - 3 > cap as soon as n + 3 exceeds cap's bit length
        if n + 3 > cap.bit_length() + 1:
            return cap, True
        v = 2 ** (n + 3) - 3
    else:
        # A(m, 0) = A(m-1, 1); A(m, i) = A(m-1, A(m, i-1)). Values grow with i,
        # so the first saturated inner value saturates everything after it.
        v, sat = _ackermann(m - 1, 1, cap)
        for _ in range(n):
            if sat:
                break
            v, sat = _ackermann(m - 1, v, cap)
        if sat:
            return cap, True
    if v > cap:
        return cap, True
    return v, False


def ackermann(m: int, n: int, cap: int = DEFAULT_CAP) -> SaturatingValue:
    """A(m, n), or ``{cap, saturated}`` once the true value exceeds ``cap``."""
    if m == 0 and n >= 0 and cap >= 1:
        # hot path
        v = n + 1
        return SaturatingValue(cap, True) if v > cap else SaturatingValue(v, False)
    if m < 0 or n < 0:
        raise ValueError("ackermann arguments must be non-negative")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if m <= 3:
        return SaturatingValue(*_closed_form(m, n, cap))
    if m > 4:
        # A(k, 0) rises with k; once it saturates every higher level does too.
        # Walking up from 4 also keeps the recursion shallow.
        for k in range(4, m + 1):
            if _ackermann(k, 0, cap)[1]:
                return SaturatingValue(cap, True)
    v, sat = _ackermann(m, n, cap)
    return SaturatingValue(v, sat)


@dataclass(frozen=True)
class GrowthTrace:
    m: int
    n: int
    steps: tuple[SaturatingValue, ...]
    truncated: bool

    @property
    def final(self) -> SaturatingValue:
        return self.steps[-1]


class LazyTrace:
    """Reduction trace of A(m, n) materialized only as far as it is read."""

    def __init__(self, m: int, n: int, cap: int):
        self.m, self.n, self.cap = m, n, cap
        self._machine = kernels.trace_machine(m, n, cap)
        self._steps: list[int] = []
        self._lock = threading.Lock()

    def step(self, pos: int) -> Optional[SaturatingValue]:
        """Value of step ``pos`` (0-based), or None when the trace ended earlier."""
        with self._lock:
            while len(self._steps) <= pos and not self._machine.done:
                self._steps.extend(self._machine.advance(max(64, pos + 1 - len(self._steps))))
            if pos >= len(self._steps):
                return None
            v = self._steps[pos]
            last = pos == len(self._steps) - 1
            return SaturatingValue(v, bool(last and self._machine.saturated))


@functools.lru_cache(maxsize=256)
def _lazy_trace(m: int, n: int, cap: int) -> LazyTrace:
    return LazyTrace(m, n, cap)


def ackermann_trace(m: int, n: int, cap: int = DEFAULT_CAP, max_steps: int = DEFAULT_MAX_STEPS) -> GrowthTrace:
    """Values of successive innermost resolutions in leftmost-innermost order.

    Each step is the collapse of an ``A(0, x)`` redex to ``x + 1``. Once an
    intermediate value passes ``cap`` the remaining reduction cannot come back
    under it, so the trace ends with a saturated step.
    """
    if m < 0 or n < 0:
        raise ValueError("ackermann arguments must be non-negative")
    if cap < 1 or max_steps < 1:
        raise ValueError("cap and max_steps must be >= 1")
    machine = kernels.trace_machine(m, n, cap)
    raw = machine.advance(max_steps)
    steps = [SaturatingValue(v) for v in raw]
    if machine.saturated:
        steps[-1] = SaturatingValue(cap, True)
    return GrowthTrace(m, n, tuple(steps), truncated=not machine.done)


def quantize_demand(D_s: float, levels: int, d_max: float) -> int:
    if D_s < 0:
        raise ValueError("service demand must be >= 0")
    if levels < 1 or not d_max > 0:
        raise ValueError("levels must be >= 1 and d_max > 0")
    level = math.floor(min(D_s, d_max) / d_max * levels)
    return max(0, min(level, levels))


@dataclass(frozen=True)
class MonitorConfig:
    cap: int = DEFAULT_CAP
    levels: int = 3
    d_max: float = 1.0
    growth_on: str = "density_drop"
    eps: float = EPS_RELEASE

    def __post_init__(self):
        if self.growth_on not in ("density_drop", "density_rise"):
            raise ValueError(f"growth_on must be density_drop or density_rise, not {self.growth_on!r}")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")


@dataclass(frozen=True)
class Observation:
    dt_i: float
    dt_next: float
    D_s: float
    r: Optional[float] = None


@dataclass(frozen=True)
class Decision:
    kind: str  # "grow" | "hold" | "migrate"
    to: Optional[int] = None

    @classmethod
    def grow(cls, to: int) -> "Decision":
        return cls("grow", to)

    @classmethod
    def hold(cls) -> "Decision":
        return cls("hold")

    @classmethod
    def migrate(cls) -> "Decision":
        return cls("migrate")


@dataclass(frozen=True)
class MonitorState:
    Q_d: int = 0
    Q_g: SaturatingValue = field(default_factory=lambda: SaturatingValue(1))
    demand_level: int = 0
    trace_pos: int = 0
    # (m, n) of the reduction currently being walked; None before the first walk
    trace_key: Optional[tuple[int, int]] = None
    anchor: Anchor = field(default_factory=lambda: Anchor(0))


def init_monitor(anchor: Optional[Anchor] = None) -> MonitorState:
    return MonitorState(anchor=anchor if anchor is not None else Anchor(0))


def monitor_step(
    state: MonitorState, obs: Observation, config: MonitorConfig = MonitorConfig()
) -> tuple[MonitorState, Decision]:
    """Advance the monitor by one density observation.

    Zero demand grows the depth by one. Otherwise, when the density signal
    fires, one more step of the A(level, depth) reduction is taken and the
    depth grows to that step's value plus one. With neither, a utilization
    ratio at 1 releases the anchor and asks for a migration.
    """
    cap = config.cap
    values = (obs.dt_i, obs.dt_next, obs.D_s)
    if any(not math.isfinite(v) or v < 0 for v in values) or not any(values):
        # nothing observed (or garbage): keep the queue alive, change nothing
        return replace(state, Q_d=max(state.Q_d, 1)), Decision.hold()
    level = quantize_demand(obs.D_s, config.levels, config.d_max)
    if config.growth_on == "density_drop":
        fired = obs.dt_i > obs.dt_next
    else:
        fired = obs.dt_i < obs.dt_next

    if level == 0:
        q_g = SaturatingValue.of(state.Q_d + 1, cap)
        q_d = max(state.Q_d, q_g.value, 1)
        new = replace(state, Q_d=q_d, Q_g=q_g, demand_level=0)
        return new, Decision.grow(q_d)

    if fired:
        key, pos = state.trace_key, state.trace_pos
        if key is None or key[0] != level:
            key, pos = (level, max(state.Q_d, 1)), 0
        value = _lazy_trace(key[0], key[1], cap).step(pos)
        if value is None:
            # walk finished: restart from the depth it produced
            key, pos = (level, max(state.Q_d, 1)), 0
            value = _lazy_trace(key[0], key[1], cap).step(pos)
        if value.saturated:
            q_g = SaturatingValue(cap, True)
        else:
            q_g = SaturatingValue.of(value.value + 1, cap)
        q_d = max(state.Q_d, q_g.value, 1)
        new = replace(state, Q_d=q_d, Q_g=q_g, demand_level=level, trace_key=key, trace_pos=pos + 1)
        return new, Decision.grow(q_d)

    q_d = max(state.Q_d, 1)
    if obs.r is not None and obs.r >= 0:
        anchor = check_release(state.anchor, obs.r, config.eps)
        if anchor.released:
            return replace(state, Q_d=q_d, demand_level=level, anchor=anchor), Decision.migrate()
    return replace(state, Q_d=q_d, demand_level=level), Decision.hold()


def long_run_growth_index(growth_history: list[list[int]], cap: int = DEFAULT_CAP) -> SaturatingValue:
    """Sum over windows of the product of the window's growth values, saturating."""
    if not growth_history:
        raise ValueError("growth history is empty")
    total = 0
    for window in growth_history:
        prod = 1
        for q in window:
            if q < 1:
                raise ValueError("growth values must be >= 1")
            prod *= q
            if prod > cap:
                return SaturatingValue(cap, True)
        total += prod
        if total > cap:
            return SaturatingValue(cap, True)
    return SaturatingValue.of(total, cap)
