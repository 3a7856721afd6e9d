"""Command-line entry point: ``lopsim generate|run|baseline|verify|audit|sweep``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DegreeExceedsProblem, LopError, ParseError
from .experiments import Experiment, dump_json, write_baseline, write_run, write_sweep
from .graph import FORMAT_VERSION, generate, load_graph, save_graph
from .lop import Labeling, make_problem, verify_solution
from .oracles import OracleConfig, audit

EXIT_OK, EXIT_USAGE, EXIT_UNVERIFIED, EXIT_FALLBACK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs):
    out = {}
    for pair in pairs:
        key, sep, val = pair.partition("=")
        if not sep or not key:
            raise ParseError(f"expected key=value, got {pair!r}")
        out[key] = _value(val)
    return out


def cmd_generate(args):
    g = generate(args.kind, seed=args.seed, **_params(args.params))
    save_graph(g, args.out)
    print(f"wrote {args.out}: n={g.n} m={g.m}")
    return EXIT_OK


def _experiment(args):
    return Experiment.load(args.experiment)


def cmd_run(args):
    exp = _experiment(args)
    seed = exp.seeds[0] if args.seed is None else args.seed
    result = write_run(exp, seed, args.out, instrument=args.instrument, figures=not args.no_figures)
    s = result.summary()
    print(f"verified={s['verified']} fallback_used={s['fallback_used']} phases={s['phases']} rounds={s['total_rounds']}")
    return result.exit_code


def cmd_baseline(args):
    exp = _experiment(args)
    seed = exp.seeds[0] if args.seed is None else args.seed
    labeling, trace = write_baseline(exp, seed, args.out, args.policy, figures=not args.no_figures)
    print(f"flips={trace.flips}")
    return EXIT_OK


def cmd_verify(args):
    g = load_graph(args.graph)
    problem = make_problem(args.problem, **_params(args.params))
    if g.max_degree > problem.max_degree:
        raise DegreeExceedsProblem(f"graph degree {g.max_degree} exceeds {problem.max_degree}")
    try:
        data = json.loads(Path(args.labeling).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.labeling}: {exc.msg}", line=exc.lineno) from None
    labeling = Labeling.from_json(data, g, problem)
    if any(x is None for x in labeling.node_out):
        raise ParseError("labeling does not cover every node")
    report = verify_solution(problem, g, labeling)
    for v in report.violations:
        print(f"violation: node {v}")
    print(f"{len(report.violations)} violations")
    return EXIT_OK if report.ok else EXIT_UNVERIFIED


def cmd_audit(args):
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    report = audit(OracleConfig(**data))
    if args.out:
        dump_json(report, args.out)
    print(json.dumps({k: v for k, v in report.items() if k != "config"}, sort_keys=True))
    return EXIT_OK if report["ok"] else EXIT_UNVERIFIED


def cmd_sweep(args):
    exp = _experiment(args)
    rows, summary = write_sweep(exp, args.out, workers=args.workers, figures=not args.no_figures)
    print(f"cells={len(rows)} verified_fraction={summary['verified_fraction']} exponent={summary['polylog_exponent']}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="lopsim", description="Simulate distributed local search for locally optimal problems.")
    parser.add_argument("--version", action="version", version=f"lopsim (format {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a generated graph")
    p.add_argument("kind", choices=["cycle", "path", "grid", "random_regular", "random_bounded"])
    p.add_argument("params", nargs="*", help="generator parameters as key=value (n=64 degree=3)")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_generate)

    for name, func, text in (("run", cmd_run, "run the phase algorithm"), ("baseline", cmd_baseline, "run the sequential fixer")):
        p = sub.add_parser(name, help=text)
        p.add_argument("experiment", help="experiment file (JSON)")
        p.add_argument("-o", "--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the first listed seed")
        p.add_argument("--no-figures", action="store_true")
        if name == "run":
            p.add_argument("--instrument", action="store_true", help="also dump per-phase clusterings")
        else:
            p.add_argument("--policy", choices=["lowest_id", "random"], default="lowest_id")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="check a labeling against a problem")
    p.add_argument("graph")
    p.add_argument("labeling")
    p.add_argument("--problem", required=True, choices=["cut", "defective"])
    p.add_argument("--param", dest="params", action="append", default=[], metavar="KEY=VALUE",
                   help="problem parameter, repeatable (--param max_degree=3)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", help="run the brute-force oracles")
    p.add_argument("--config", help="oracle config (JSON)")
    p.add_argument("-o", "--out", help="write the JSON report here")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sweep", help="run an (n x seed) grid")
    p.add_argument("experiment")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--workers", type=int, help="process count (default: $LOPSIM_WORKERS or 1)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LopError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
