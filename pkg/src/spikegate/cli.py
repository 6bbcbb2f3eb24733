"""``spikegate`` command line.

Exit codes: 0 success, 1 diagnostics or a failed check, 2 usage error.
Traces go to standard output, diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bench, blocks, repro, traceio
from .core import DEFAULT_PARAMS, CircuitError, SimConfig, calibrate_unit_current, run
from .netlist import NetlistError, elaborate, parse

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    raw = os.environ.get("SPIKEGATE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"SPIKEGATE_SEED must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spikegate", description="Spike-based logic blocks: simulate, verify, reproduce.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate a .snl netlist and print its trace")
    r.add_argument("file", type=Path)
    r.add_argument("--until", type=int, help="horizon in ticks; overrides the netlist's run statement")
    r.add_argument("--backend", choices=("lif", "abstract"), default="abstract")
    r.add_argument("--format", choices=("ascii", "csv", "json"), default="ascii")
    r.add_argument("--out", type=Path, help="write the trace here instead of standard output")
    r.add_argument("--membrane", action="store_true", help="also export membrane samples of probed neurons (lif only)")

    rp = sub.add_parser("repro", help="rerun a built-in experiment under both backends")
    rp.add_argument("experiment", choices=repro.EXPERIMENTS + ("all",))

    g = sub.add_parser("gate-test", help="random stimuli, simulated block versus oracle")
    g.add_argument("kind", choices=blocks.BLOCK_KINDS)
    g.add_argument("--inputs", type=int, default=None)
    g.add_argument("--trials", type=int, default=100)
    g.add_argument("--seed", type=int, default=None, help="default: $SPIKEGATE_SEED or 0")
    g.add_argument("--horizon", type=int, default=200)
    g.add_argument("--backend", choices=("lif", "abstract", "both"), default="both")

    c = sub.add_parser("check", help="parse, validate and print per-block resources")
    c.add_argument("file", type=Path)

    sub.add_parser("calibrate", help="print the nA per unit weight for the default neuron parameters")
    return p


def _load(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        print(f"{path}: {e.strerror}", file=sys.stderr)
        return None
    try:
        return elaborate(parse(text))
    except NetlistError as e:
        for d in e.diagnostics:
            print(f"{path}:{d}", file=sys.stderr)
        return None


def cmd_run(args, parser) -> int:
    if args.until is not None and args.until < 1:
        parser.error("--until must be >= 1")
    if args.membrane and args.backend != "lif":
        parser.error("--membrane needs --backend lif")
    elab = _load(args.file)
    if elab is None:
        return EXIT_FAIL
    horizon = args.until or elab.horizon
    if horizon is None:
        parser.error(f"{args.file} has no run statement; pass --until")
    try:
        raw = run(elab.circuit, SimConfig(args.backend, horizon, record_membrane=args.membrane))
    except CircuitError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return EXIT_FAIL
    trace = raw.select(elab.signals())
    if args.format == "ascii":
        text = traceio.render_ascii(trace)
    elif args.format == "csv":
        text = traceio.export_csv(trace)
    else:
        text = traceio.export_json(trace)
    membrane = traceio.export_membrane_csv(raw) if args.membrane else None
    if args.out:
        args.out.write_text(text, encoding="utf-8")
        if membrane is not None:
            args.out.with_name(args.out.name + ".membrane.csv").write_text(membrane, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if membrane is not None:
            sys.stdout.write("\n" + membrane)
    return EXIT_OK


def cmd_repro(args, parser) -> int:
    names = repro.EXPERIMENTS if args.experiment == "all" else (args.experiment,)
    ok = True
    for name in names:
        outcome = repro.repro(name)
        sys.stdout.write(outcome.render())
        ok &= outcome.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_gate_test(args, parser) -> int:
    n = args.inputs if args.inputs is not None else bench.ARITY.get(args.kind, 1)
    if not bench.arity_ok(args.kind, n):
        parser.error(f"{args.kind} needs at least {bench.ARITY[args.kind]} inputs, got {n}")
    if args.trials < 1 or args.horizon < 4:
        parser.error("--trials must be >= 1 and --horizon >= 4")
    seed = args.seed if args.seed is not None else _default_seed()
    backends = ("abstract", "lif") if args.backend == "both" else (args.backend,)
    report = bench.gate_test(args.kind, n, args.trials, seed, args.horizon, backends)
    sys.stdout.write(report.render())
    return EXIT_OK if report.mismatches == 0 else EXIT_FAIL


def _latency_text(latency) -> str:
    return "/".join(str(x) for x in latency) if isinstance(latency, tuple) else str(latency)


def cmd_check(args, parser) -> int:
    elab = _load(args.file)
    if elab is None:
        return EXIT_FAIL
    footnote = False
    for name, h in elab.handles.items():
        neurons, connections, latency = blocks.resource_report(h)
        if h.kind == "flank":
            bare = blocks.resource_report(h, include_css=False)[0]
            print(f"{h.kind}: {neurons} neurons ({bare} without css)*, {connections} connections, "
                  f"latency {_latency_text(latency)}  [{name}]")
            footnote = True
        else:
            print(f"{h.kind}: {neurons} neurons, {connections} connections, latency {_latency_text(latency)}  [{name}]")
    if footnote:
        print("* flank detector neurons include the 2-neuron constant spike source it shares")
    return EXIT_OK


def cmd_calibrate(args, parser) -> int:
    print(f"unit_current {calibrate_unit_current(DEFAULT_PARAMS):.9g} nA")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "repro": cmd_repro,
    "gate-test": cmd_gate_test,
    "check": cmd_check,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    return COMMANDS[args.command](args, sub)


if __name__ == "__main__":
    raise SystemExit(main())
