"""Command line entry point: ``wsnsched run|tables|validate --scenario FILE``."""

from __future__ import annotations

import argparse
import sys

from .scenario import ScenarioSyntaxError, ScenarioValidationError, load_scenario
from .simulator import format_summary, run
from .tables import render_tables
from .trace import emit_trace

EXIT_OK, EXIT_INVALID, EXIT_SYNTAX = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wsnsched", description="Sleep/wake scheduling simulator for clustered sensor networks.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate a scenario and write its trace")
    r.add_argument("--scenario", required=True, help="scenario file, or the name of a bundled one")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--trace", default=None, help="write the trace to this file (default or '-': stdout)")
    r.add_argument("--summary", action="store_true", help="print the energy and delivery summary")
    t = sub.add_parser("tables", help="print the control-plane and cluster-head tables")
    t.add_argument("--scenario", required=True)
    t.add_argument("--seed", type=int, default=None)
    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("--scenario", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"error: scenario not found: {args.scenario}", file=sys.stderr)
        return EXIT_INVALID
    except ScenarioSyntaxError as exc:
        print(f"syntax error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except ScenarioValidationError as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        print(f"ok: {len(scenario.clusters)} cluster(s), {sum(len(c.nodes) for c in scenario.clusters)} node(s)")
        return EXIT_OK

    if args.command == "tables":
        sys.stdout.write(render_tables(run(scenario, args.seed)))
        return EXIT_OK

    result = run(scenario, args.seed)
    to_file = args.trace not in (None, "-")
    if to_file:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as sink:
            emit_trace(result.trace, sink)
    else:
        emit_trace(result.trace, sys.stdout)
    if args.summary:
        out = sys.stdout if to_file else sys.stderr
        out.write(format_summary(result.summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
