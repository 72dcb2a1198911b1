"""``endurq`` command line.

Exit codes: 0 success, 1 I/O failure, 2 validation or usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import growth, heatmap, metrics, product_form
from .config import ConfigError, load_config
from .simulator import compare_baseline, run_simulation
from .workload import EventTrace, WorkloadProfile, generate_workload

log = logging.getLogger("endurq")

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2


class _Invalid(Exception):
    pass


def _write(args, data) -> None:
    if isinstance(data, str):
        data = data.encode()
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        raise _Invalid(f"{path}: {exc}") from exc


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    report = run_simulation(cfg, args.policy)
    _write(args, report.to_json())
    if args.timeline:
        Path(args.timeline).write_text(report.queue_stats.timeline_csv())
    if args.heatmap:
        Path(args.heatmap).write_bytes(heatmap.export_heatmap(report.heatmap, "csv"))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    arms = compare_baseline(cfg)
    _write(args, _json({name: r.to_dict() for name, r in arms.items()}))
    return EXIT_OK


def cmd_heatmap(args) -> int:
    text = Path(args.trace).read_text()
    try:
        trace = EventTrace.from_csv(text)
        order = args.systems.split(",") if args.systems else None
        hm = heatmap.build_heatmap(trace, args.bucket_width, order)
    except ValueError as exc:
        raise _Invalid(str(exc)) from exc
    _write(args, heatmap.export_heatmap(hm, args.format))
    return EXIT_OK


def cmd_capacity(args) -> int:
    text = Path(args.metrics).read_text()
    try:
        rows = metrics.read_metrics_csv(text)
        totals = metrics.aggregate_stack(rows)
        scores = [metrics.compute_capacity(m, totals) for m in rows]
        if args.partition is not None:
            out = metrics.partition_systems(scores, args.partition).to_dict()
        else:
            out = [s.to_dict() for s in scores]
    except ValueError as exc:
        raise _Invalid(str(exc)) from exc
    _write(args, _json(out))
    return EXIT_OK


def _demands(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("demands must all be positive")
    return values


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_int(text):
    v = _nonneg_int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def cmd_gn(args) -> int:
    g = product_form.normalizing_constant(args.demands, args.population)
    _write(args, "".join(f"{v:.9f}\n" for v in g))
    return EXIT_OK


def cmd_ackermann(args) -> int:
    lines = []
    if args.trace:
        tr = growth.ackermann_trace(args.m, args.n, args.cap, args.max_steps)
        lines.extend(str(s) for s in tr.steps)
        if tr.truncated:
            lines.append("truncated")
    lines.append(str(growth.ackermann(args.m, args.n, args.cap)))
    _write(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_trace_gen(args) -> int:
    try:
        profile = WorkloadProfile(
            kind=args.profile,
            duration=args.duration,
            seed=args.seed,
            rate=args.rate,
            base_rate=args.base_rate,
            burst_rate=args.burst_rate,
            burst_duration=args.burst_duration,
            period=args.period,
            gap=args.gap,
            active=args.active,
            system_id=args.system_id,
            trace=EventTrace.from_csv(Path(args.replay).read_text()) if args.replay else None,
        )
    except ValueError as exc:
        raise _Invalid(str(exc)) from exc
    _write(args, generate_workload(profile).to_csv())
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="endurq", description="Endurance queue simulator and model tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_flag(p):
        p.add_argument("--out", "-o", help="write output here instead of standard output")

    p = sub.add_parser("simulate", help="run one simulation and print the report as JSON")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override both the config and workload seeds")
    p.add_argument("--policy", choices=("endurance", "fixed"), default="endurance")
    p.add_argument("--timeline", help="also write the queue depth timeline CSV here")
    p.add_argument("--heatmap", help="also write the heat map CSV here")
    out_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="endurance policy vs fixed depth-1 queue on one workload")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    out_flag(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("heatmap", help="bucket a trace CSV into a density heat map")
    p.add_argument("trace")
    p.add_argument("--bucket-width", type=float, default=1.0)
    p.add_argument("--systems", help="comma-separated column order")
    p.add_argument("--format", choices=("csv", "ppm"), default="csv")
    out_flag(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("capacity", help="capacity scores from a metrics CSV")
    p.add_argument("metrics")
    p.add_argument("--partition", type=_pos_int, metavar="K", help="emit the K-group partition instead")
    out_flag(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("gn", help="normalizing constants G(0..N)")
    p.add_argument("--demands", type=_demands, required=True)
    p.add_argument("--population", type=_nonneg_int, required=True)
    out_flag(p)
    p.set_defaults(func=cmd_gn)

    p = sub.add_parser("ackermann", help="saturating Ackermann value and reduction trace")
    p.add_argument("m", type=_nonneg_int)
    p.add_argument("n", type=_nonneg_int)
    p.add_argument("--cap", type=_pos_int, default=growth.DEFAULT_CAP)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--max-steps", type=_pos_int, default=10_000)
    out_flag(p)
    p.set_defaults(func=cmd_ackermann)

    p = sub.add_parser("trace-gen", help="generate a seeded workload trace CSV")
    p.add_argument("--profile", choices=("poisson", "bursty", "sparse", "replay"), required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    for name in ("rate", "base-rate", "burst-rate", "burst-duration", "period", "gap", "active"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--replay", help="trace CSV to replay")
    p.add_argument("--system-id", default="source")
    out_flag(p)
    p.set_defaults(func=cmd_trace_gen)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("ENDURQ_LOG", "error").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.ERROR),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Invalid as exc:
        print(f"endurq {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"endurq {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
