"""Simulation configuration and its JSON schema.

Example document::

    {
      "systems": [
        {"system_id": "ingest", "service": {"kind": "deterministic", "value": 0.01}, "d_m": 1},
        {"system_id": "ledger", "service": {"kind": "exponential", "mean": 0.1}, "d_m": 2}
      ],
      "workload": {"kind": "bursty", "base_rate": 2, "burst_rate": 50,
                   "burst_duration": 5, "period": 40, "duration": 400, "seed": 1},
      "bucket_width": 1.0,
      "cap": 1048576,
      "partition_k": 2,
      "growth_on": "density_drop",
      "seed": 1
    }

Optional keys: ``warmup_fraction`` (0.1), ``demand_levels`` (3),
``demand_scale`` (1.0 s), ``peak_quantile`` (0.9), ``theta`` (2.0),
``migrate_reset`` (false). A replay workload takes ``"trace": "path.csv"``
(relative to the config file) or inline ``"events": [[t, id, n], ...]``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .growth import DEFAULT_CAP
from .workload import EventTrace, WorkloadProfile


class ConfigError(ValueError):
    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.message = message
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"{field}: {message}{where}")


@dataclass(frozen=True)
class ServiceDist:
    kind: str  # "deterministic" | "exponential"
    mean: float

    def to_dict(self) -> dict:
        if self.kind == "deterministic":
            return {"kind": "deterministic", "value": self.mean}
        return {"kind": "exponential", "mean": self.mean}


@dataclass(frozen=True)
class SystemSpec:
    system_id: str
    service: ServiceDist
    d_m: int = 1


@dataclass(frozen=True)
class SimConfig:
    systems: tuple[SystemSpec, ...]
    workload: WorkloadProfile
    bucket_width: float = 1.0
    cap: int = DEFAULT_CAP
    partition_k: int = 2
    growth_on: str = "density_drop"
    seed: int = 0
    warmup_fraction: float = 0.1
    demand_levels: int = 3
    demand_scale: float = 1.0
    peak_quantile: float = 0.9
    theta: float = 2.0
    migrate_reset: bool = False

    def __post_init__(self):
        _validate(self)

    @property
    def duration(self) -> float:
        return self.workload.duration

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed, workload=replace(self.workload, seed=seed))

    def to_dict(self) -> dict:
        return {
            "systems": [
                {"system_id": s.system_id, "service": s.service.to_dict(), "d_m": s.d_m}
                for s in self.systems
            ],
            "workload": self.workload.to_dict(),
            "bucket_width": self.bucket_width,
            "cap": self.cap,
            "partition_k": self.partition_k,
            "growth_on": self.growth_on,
            "seed": self.seed,
            "warmup_fraction": self.warmup_fraction,
            "demand_levels": self.demand_levels,
            "demand_scale": self.demand_scale,
            "peak_quantile": self.peak_quantile,
            "theta": self.theta,
            "migrate_reset": self.migrate_reset,
        }


def _validate(cfg: SimConfig) -> None:
    if len(cfg.systems) < 2:
        raise ConfigError("systems", "at least an upstream and a downstream system are required")
    seen = set()
    for i, s in enumerate(cfg.systems):
        if s.system_id in seen:
            raise ConfigError(f"systems[{i}].system_id", f"duplicate id {s.system_id!r}")
        seen.add(s.system_id)
        if s.d_m < 1:
            raise ConfigError(f"systems[{i}].d_m", "degree of multiprogramming must be >= 1")
        if s.service.kind not in ("deterministic", "exponential"):
            raise ConfigError(f"systems[{i}].service.kind", f"unknown distribution {s.service.kind!r}")
        if not s.service.mean > 0:
            raise ConfigError(f"systems[{i}].service", "service time must be > 0")
    checks = [
        ("bucket_width", cfg.bucket_width > 0, "must be > 0"),
        ("cap", cfg.cap >= 1, "must be >= 1"),
        ("partition_k", 2 <= cfg.partition_k <= len(cfg.systems), "must lie in [2, number of systems]"),
        ("growth_on", cfg.growth_on in ("density_drop", "density_rise"), "must be density_drop or density_rise"),
        ("warmup_fraction", 0 < cfg.warmup_fraction < 1, "must lie in (0, 1)"),
        ("demand_levels", cfg.demand_levels >= 1, "must be >= 1"),
        ("demand_scale", cfg.demand_scale > 0, "must be > 0"),
        ("peak_quantile", 0 < cfg.peak_quantile <= 1, "must lie in (0, 1]"),
        ("theta", cfg.theta > 1, "must be > 1"),
    ]
    for field, ok, message in checks:
        if not ok:
            raise ConfigError(field, message)


_TOP_KEYS = {
    "systems", "workload", "bucket_width", "cap", "partition_k", "growth_on", "seed",
    "warmup_fraction", "demand_levels", "demand_scale", "peak_quantile", "theta", "migrate_reset",
}
_WORKLOAD_KEYS = {
    "kind", "duration", "seed", "rate", "base_rate", "burst_rate", "burst_duration",
    "period", "gap", "active", "trace", "events", "system_id",
}


def _num(doc, key, field, kind=float, default=None):
    if key not in doc:
        if default is None:
            raise ConfigError(field, "missing")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(field, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def config_from_dict(doc: dict, base_dir: Optional[Path] = None) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    raw_systems = doc.get("systems")
    if not isinstance(raw_systems, list):
        raise ConfigError("systems", "expected a list")
    systems = []
    for i, raw in enumerate(raw_systems):
        f = f"systems[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f, "expected an object")
        if "system_id" not in raw:
            raise ConfigError(f"{f}.system_id", "missing")
        service = raw.get("service")
        if not isinstance(service, dict):
            raise ConfigError(f"{f}.service", "expected an object")
        kind = service.get("kind")
        if kind == "deterministic":
            mean = _num(service, "value", f"{f}.service.value")
        elif kind == "exponential":
            mean = _num(service, "mean", f"{f}.service.mean")
        else:
            raise ConfigError(f"{f}.service.kind", f"unknown distribution {kind!r}")
        d_m = _num(raw, "d_m", f"{f}.d_m", int, default=1)
        systems.append(SystemSpec(str(raw["system_id"]), ServiceDist(kind, mean), d_m))

    wl = doc.get("workload")
    if not isinstance(wl, dict):
        raise ConfigError("workload", "expected an object")
    unknown = sorted(set(wl) - _WORKLOAD_KEYS)
    if unknown:
        raise ConfigError(f"workload.{unknown[0]}", "unknown key")
    kwargs = {}
    for key in ("rate", "base_rate", "burst_rate", "burst_duration", "period", "gap", "active"):
        if key in wl:
            kwargs[key] = _num(wl, key, f"workload.{key}")
    trace = None
    if wl.get("kind") == "replay":
        if "events" in wl:
            trace = EventTrace(tuple((float(t), str(s), int(c)) for t, s, c in wl["events"]))
        elif "trace" in wl:
            path = Path(wl["trace"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            trace = EventTrace.from_csv(path.read_text())
    seed = _num(doc, "seed", "seed", int, default=0)
    try:
        workload = WorkloadProfile(
            kind=str(wl.get("kind")),
            duration=_num(wl, "duration", "workload.duration"),
            seed=_num(wl, "seed", "workload.seed", int, default=seed),
            trace=trace,
            system_id=str(wl.get("system_id", "source")),
            **kwargs,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("workload", str(exc)) from exc

    growth_on = doc.get("growth_on", "density_drop")
    migrate_reset = doc.get("migrate_reset", False)
    if not isinstance(migrate_reset, bool):
        raise ConfigError("migrate_reset", "expected true or false")
    return SimConfig(
        systems=tuple(systems),
        workload=workload,
        bucket_width=_num(doc, "bucket_width", "bucket_width", default=1.0),
        cap=_num(doc, "cap", "cap", int, default=DEFAULT_CAP),
        partition_k=_num(doc, "partition_k", "partition_k", int, default=2),
        growth_on=str(growth_on),
        seed=seed,
        warmup_fraction=_num(doc, "warmup_fraction", "warmup_fraction", default=0.1),
        demand_levels=_num(doc, "demand_levels", "demand_levels", int, default=3),
        demand_scale=_num(doc, "demand_scale", "demand_scale", default=1.0),
        peak_quantile=_num(doc, "peak_quantile", "peak_quantile", default=0.9),
        theta=_num(doc, "theta", "theta", default=2.0),
        migrate_reset=migrate_reset,
    )


def _locate(text: str, field: str) -> Optional[int]:
    """Best-effort line number of ``field`` (e.g. ``systems[1].d_m``) in ``text``."""
    parts = re.findall(r"([A-Za-z_]+)(?:\[(\d+)\])?", field)
    if not parts:
        return None
    key, _ = parts[-1]
    # for systems[i].key use the i-th occurrence of the key
    nth = 0
    for name, idx in parts[:-1]:
        if idx:
            nth = int(idx)
    hits = [m.start() for m in re.finditer(rf'"{re.escape(key)}"\s*:', text)]
    if not hits:
        return None
    pos = hits[min(nth, len(hits) - 1)]
    return text.count("\n", 0, pos) + 1


def load_config(path) -> SimConfig:
    """Read and validate a JSON config; raises OSError or ConfigError."""
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", exc.msg, exc.lineno) from exc
    try:
        return config_from_dict(doc, path.parent)
    except ConfigError as exc:
        if exc.line is None:
            raise ConfigError(exc.field, exc.message, _locate(text, exc.field)) from None
        raise
