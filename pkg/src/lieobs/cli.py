"""Command-line front end: ``lieobs run|verify|plot|list-builtins``.

Exit codes: 0 success, 2 validation error, 3 step failure, 4 I/O error.
"""

import argparse
import json
import sys

from .exceptions import GainsInvalid, MissingData, ScenarioInvalid
from .experiment import emit_plot_script, run_scenario
from .scenario import BUILTINS
from .verify import SELECTORS, format_report, run_property_suite

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_STEP_FAILURE = 3
EXIT_IO = 4


def _positive_int(text):
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return k


def build_parser():
    p = argparse.ArgumentParser(prog="lieobs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario file or built-in study")
    run.add_argument("scenario", help="path to a scenario file, or a built-in name")
    run.add_argument("--out", help="output directory (default: $LIEOBS_OUT/<name> or ./lieobs-out/<name>)")
    run.add_argument("--seeds", type=_positive_int, help="number of seeds for noisy scenarios")
    run.add_argument("--dt", type=float, help="override the integrator step")
    run.add_argument("--t-end", type=float, help="override the horizon")

    ver = sub.add_parser("verify", help="run the numerical property suite")
    ver.add_argument("selector", nargs="?", default="all", choices=SELECTORS + ("all",))
    ver.add_argument("--json", action="store_true", help="print one JSON object per check")

    plot = sub.add_parser("plot", help="write a matplotlib script for a run manifest")
    plot.add_argument("manifest")
    plot.add_argument("--output", help="script path (default: plot.py next to the manifest)")
    plot.add_argument("--linear", action="store_true", help="linear instead of log y axis")

    sub.add_parser("list-builtins", help="list the built-in studies")
    return p


def _cmd_run(args):
    m = run_scenario(args.scenario, out_dir=args.out, seeds=args.seeds, dt=args.dt, t_end=args.t_end)
    for r in m.runs:
        seed = "" if r.seed is None else f" seed={r.seed}"
        fail = "" if r.failure_time is None else f" FAILED at t={r.failure_time:g}"
        term = "n/a" if r.terminal_error is None else f"{r.terminal_error:.6e}"
        print(f"{r.scenario}{seed}: terminal err_state={term}{fail}")
    for s in m.statistics:
        if s.seeds > 1:
            print(f"{s.scenario} {s.column}: steady-state mean={s.mean:.6e} std={s.std:.6e} over {s.seeds} seeds")
    for c in m.comparisons:
        print(f"sigma={c['sigma']:g} {c['column']}: lowest mean {c['lowest_mean']}")
    print(f"manifest: {m.path}")
    return EXIT_STEP_FAILURE if m.failed else EXIT_OK


def _cmd_verify(args):
    results = run_property_suite(args.selector)
    if args.json:
        for r in results:
            print(json.dumps(r.to_dict()))
    else:
        print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "plot":
            print(emit_plot_script(args.manifest, args.output, log_y=not args.linear))
            return EXIT_OK
        for name, text in BUILTINS.items():
            print(f"{name}\t{text}")
        return EXIT_OK
    except (ScenarioInvalid, GainsInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (MissingData, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
