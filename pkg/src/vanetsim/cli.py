"""Command line: single runs, parameter sweeps, report files and metric recomputation.

    vanetsim run --config sim.cfg [--seed N] [--out DIR] [--mode protocol|baseline]
                 [--sweep key=v1,v2,...]... [--seeds N] [--trace packets|events]...
    vanetsim recompute --ledger DIR/<run_id>/packets.csv --out DIR

Exit codes: 0 all runs completed, 2 config or parse error, 3 runtime or I/O fault.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import (FIELD_TYPES, ConfigError, SimConfig, _coerce, parse_config,
                     render_config, validate_config)
from .engine import RuntimeFault, SimResult, run
from .metrics import (KIND_CODE, KINDS, METRICS_HEADER, MetricsReport, PacketLedger, RunLogs,
                      compute_report, metrics_row)
from .radio import OUTCOMES

EXIT_OK, EXIT_CONFIG, EXIT_FAULT = 0, 2, 3
TRACE_FLAGS = ("packets", "events")
PACKETS_HEADER = "seq,kind,size,src,created_at,t_start,t_end,detail,receiver,outcome"

# standard QoS sweep axes, usable as ``--sweep data_rate`` without listing values
SWEEP_AXES = {
    "data_rate": (1.5e6, 3e6, 6e6, 12e6),
    "normal_packet_bytes": (128, 256, 512, 1024),
    "num_vehicles": (50, 100, 150, 200),
}


class IoError(OSError):
    pass


@dataclass
class RunSpec:
    config_path: str | None = None
    seed: int | None = None
    out_dir: str = "out"
    sweep: dict[str, tuple] = field(default_factory=dict)
    mode: str | None = None
    seeds: int = 1
    trace: frozenset = frozenset()

    def __post_init__(self):
        for name, values in self.sweep.items():
            if name not in FIELD_TYPES:
                raise ConfigError([f"sweep: unknown SimConfig field {name!r}"])
            if not values:
                raise ConfigError([f"sweep: empty value list for {name}"])
        if self.seeds < 1:
            raise ConfigError(["seeds: must be at least 1"])
        bad = set(self.trace) - set(TRACE_FLAGS)
        if bad:
            raise ConfigError([f"trace: unknown flag(s) {sorted(bad)}"])


@dataclass
class RunOutcome:
    run_id: str
    result: SimResult


def parse_sweep(decl: str) -> tuple[str, tuple]:
    """``key=v1,v2`` → (key, values); a bare standard axis name expands to its values."""
    name, eq, text = decl.partition("=")
    name = name.strip()
    if name not in FIELD_TYPES:
        raise ConfigError([f"sweep: unknown SimConfig field {name!r}"])
    if not eq:
        if name not in SWEEP_AXES:
            raise ConfigError([f"sweep: no value list for {name}"])
        return name, SWEEP_AXES[name]
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ConfigError([f"sweep: empty value list for {name}"])
    try:
        return name, tuple(_coerce(name, v) for v in items)
    except ValueError:
        raise ConfigError([f"sweep: bad value list {text!r} for {name}"]) from None


def load_config(path: str | None) -> SimConfig:
    if path is None:
        return validate_config(SimConfig())
    return parse_config(Path(path).read_text())


def plan_runs(spec: RunSpec, base: SimConfig) -> list[tuple[str, SimConfig]]:
    """Cross product of sweep values times seeds, validated before anything runs.

    Seeds are ``base_seed + i`` for seed index ``i``, shared by every sweep
    point so points are compared on the same seed set.
    """
    if spec.mode is not None:
        base = base.replace(mode=spec.mode)
    base_seed = spec.seed if spec.seed is not None else base.seed
    names = list(spec.sweep)
    plans = []
    for p, values in enumerate(itertools.product(*(spec.sweep[n] for n in names))):
        point = base.replace(**dict(zip(names, values)))
        for i in range(spec.seeds):
            cfg = validate_config(point.replace(seed=base_seed + i))
            plans.append((f"p{p:03d}s{i:03d}", cfg))
    return plans


# -- ledger dump format ----------------------------------------------------------

def _num(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_packets(path: Path, ledger: PacketLedger) -> None:
    """One row per (packet, intended receiver); packets with no pairs get one row
    with empty receiver and outcome so the dump holds the full ledger."""
    starts = np.searchsorted(ledger.pair_row, np.arange(ledger.seq.size), side="left")
    ends = np.searchsorted(ledger.pair_row, np.arange(ledger.seq.size), side="right")
    with open(path, "w", newline="") as fh:
        fh.write(PACKETS_HEADER + "\n")
        for i in range(ledger.seq.size):
            head = (f"{int(ledger.seq[i])},{KINDS[ledger.kind[i]]},{int(ledger.size[i])},"
                    f"{int(ledger.src[i])},{_num(ledger.created_at[i])},{_num(ledger.t_start[i])},"
                    f"{_num(ledger.t_end[i])},{ledger.detail[i]}")
            if starts[i] == ends[i]:
                fh.write(head + ",,\n")
                continue
            for j in range(starts[i], ends[i]):
                fh.write(f"{head},{int(ledger.pair_rx[j])},{OUTCOMES[ledger.pair_outcome[j]]}\n")


def read_packets(path: Path) -> PacketLedger:
    packets: dict[int, list] = {}
    pair_seq, pair_rx, pair_out = [], [], []
    code = {name: i for i, name in enumerate(OUTCOMES)}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != PACKETS_HEADER.split(","):
            raise ValueError(f"{path}: not a packet ledger dump")
        for row in reader:
            seq = int(row[0])
            if seq not in packets:
                packets[seq] = [KIND_CODE[row[1]], int(row[2]), int(row[3]), float(row[4]),
                                float(row[5]) if row[5] else math.nan,
                                float(row[6]) if row[6] else math.nan, row[7]]
            if row[8]:
                pair_seq.append(seq)
                pair_rx.append(int(row[8]))
                pair_out.append(code[row[9]])
    seqs = sorted(packets)
    recs = [packets[s] for s in seqs]
    return PacketLedger(
        seq=np.array(seqs, dtype=np.int64),
        kind=np.array([r[0] for r in recs], dtype=np.int8),
        size=np.array([r[1] for r in recs], dtype=np.int64),
        src=np.array([r[2] for r in recs], dtype=np.int64),
        created_at=np.array([r[3] for r in recs], dtype=float),
        t_start=np.array([r[4] for r in recs], dtype=float),
        t_end=np.array([r[5] for r in recs], dtype=float),
        detail=[r[6] for r in recs],
        pair_seq=np.array(pair_seq, dtype=np.int64),
        pair_rx=np.array(pair_rx, dtype=np.int64),
        pair_outcome=np.array(pair_out, dtype=np.int8),
    )


# -- reports -------------------------------------------------------------------

def _ms(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.4f} ms"


def summarize(run_id: str, cfg: SimConfig, m: MetricsReport, logs: RunLogs,
              wall_time: float | None = None) -> str:
    defaults = SimConfig()
    changed = [f"{f}={getattr(cfg, f)!r}" for f in FIELD_TYPES
               if f != "seed" and getattr(cfg, f) != getattr(defaults, f)]
    greens = sum(1 for _t, _axis, stage in logs.phase_log if stage == "green")
    lines = [
        f"== {run_id} (seed {cfg.seed}, {cfg.mode} mode)",
        f"  overrides: {', '.join(changed) if changed else 'none'}",
        f"  pdr: {'n/a' if m.pdr_percent is None else f'{m.pdr_percent:.3f} %'}",
        f"  mean e2e delay: {_ms(m.mean_e2e_delay_ms)}",
        f"  throughput: {m.throughput_bps:.1f} b/s",
        f"  packet loss: {m.packet_loss_count} pairs, {m.packet_loss_bytes} B",
        f"  pairs: {m.totals}",
    ]
    for kind, k in m.per_kind.items():
        pdr = "n/a" if k["pdr_percent"] is None else f"{k['pdr_percent']:.3f} %"
        lines.append(f"  {kind}: pdr {pdr}, delay {_ms(k['mean_e2e_delay_ms'])}, "
                     f"loss {k['packet_loss_count']}")
    w = m.warning_prop_delay
    lines += [
        f"  blockage episodes: {len(logs.episodes)}, blind vehicles: {m.blind_vehicle_count}, "
        f"box violations: {m.box_violations}",
        "  warning delay: " + ("n/a" if w is None else
                               f"mean {w['mean']:.4f} ms, p95 {w['p95']:.4f} ms, max {w['max']:.4f} ms"),
        f"  green crossings: {m.green_crossings} per run, "
        f"{m.green_crossings / greens if greens else 0.0:.2f} per green phase ({greens} phases)",
        "  mean travel time: " + ("n/a" if m.mean_travel_time_s is None
                                  else f"{m.mean_travel_time_s:.3f} s"),
    ]
    if wall_time is not None:
        lines.append(f"  wall time: {wall_time:.2f} s")
    return "\n".join(lines) + "\n"


def emit_reports(outcomes: list[RunOutcome], out_dir: str, trace=frozenset()) -> None:
    if not outcomes:
        raise ValueError("no results to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        ordered = sorted(outcomes, key=lambda o: o.run_id)
        rows = [metrics_row(o.run_id, o.result.config, o.result.metrics) for o in ordered]
        (out / "metrics.csv").write_text(METRICS_HEADER + "\n" + "\n".join(rows) + "\n")
        (out / "summary.txt").write_text("".join(
            summarize(o.run_id, o.result.config, o.result.metrics, o.result.logs,
                      o.result.wall_time) for o in ordered))
        for o in ordered:
            run_dir = out / o.run_id
            run_dir.mkdir(exist_ok=True)
            (run_dir / "config.txt").write_text(render_config(o.result.config))
            if "packets" in trace:
                write_packets(run_dir / "packets.csv", o.result.ledger)
                (run_dir / "run_logs.json").write_text(o.result.logs.to_json())
            if "events" in trace:
                (run_dir / "events.trace").write_text("".join(l + "\n" for l in o.result.trace))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def run_sweep(spec: RunSpec, err=sys.stderr) -> int:
    try:
        plans = plan_runs(spec, load_config(spec.config_path))
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    outcomes = []
    for run_id, cfg in plans:
        try:
            outcomes.append(RunOutcome(run_id, run(cfg, trace="events" in spec.trace)))
        except RuntimeFault as exc:
            print(f"runtime fault in {run_id}: {exc}", file=err)
            return EXIT_FAULT
    try:
        emit_reports(outcomes, spec.out_dir, spec.trace)
    except IoError as exc:
        print(f"write error: {exc}", file=err)
        return EXIT_FAULT
    return EXIT_OK


def recompute(ledger_path: str, out_dir: str, err=sys.stderr) -> int:
    """Rebuild the metrics row of a dumped run from its ledger and log sidecars."""
    src = Path(ledger_path)
    try:
        ledger = read_packets(src)
        logs = RunLogs.from_json((src.parent / "run_logs.json").read_text())
        cfg = parse_config((src.parent / "config.txt").read_text())
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except (OSError, ValueError, KeyError, IndexError) as exc:
        print(f"read error: {exc}", file=err)
        return EXIT_FAULT
    report = compute_report(ledger, logs)
    run_id = src.parent.name
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(METRICS_HEADER + "\n" + metrics_row(run_id, cfg, report) + "\n")
        (out / "summary.txt").write_text(summarize(run_id, cfg, report, logs))
    except OSError as exc:
        print(f"write error: {exc}", file=err)
        return EXIT_FAULT
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vanetsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one configuration or a sweep")
    r.add_argument("--config", help="key = value config file (defaults when omitted)")
    r.add_argument("--seed", type=int, help="base seed; overrides the config")
    r.add_argument("--out", default="out", help="output directory")
    r.add_argument("--mode", choices=("protocol", "baseline"))
    r.add_argument("--sweep", action="append", default=[], metavar="KEY=V1,V2,...")
    r.add_argument("--seeds", type=int, default=1, help="seeds per sweep point")
    r.add_argument("--trace", action="append", default=[], choices=TRACE_FLAGS)
    c = sub.add_parser("recompute", help="recompute metrics from a dumped ledger")
    c.add_argument("--ledger", required=True, help="packets.csv written by run --trace packets")
    c.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "recompute":
        return recompute(args.ledger, args.out)
    try:
        sweep = dict(parse_sweep(d) for d in args.sweep)
        spec = RunSpec(args.config, args.seed, args.out, sweep, args.mode, args.seeds,
                       frozenset(args.trace))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_sweep(spec)


if __name__ == "__main__":
    sys.exit(main())
