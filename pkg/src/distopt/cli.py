"""Command line entry point (``distopt``)."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import DistoptError, ScenarioParseError, ScenarioValidationError
from .metrics import centralized_oracle
from .scenario import VARIANTS, builtin_benchmark, load_scenario, run, serialize_scenario, validate_scenario


def _print_report(report):
    sys.stdout.write(report.text())


def cmd_run(args):
    sc = load_scenario(args.scenario).with_overrides(seed=args.seed, stride=args.stride, horizon=args.horizon)
    _print_report(run(sc, args.out, figures=not args.no_figures))
    return 0


def cmd_builtin(args):
    sc = builtin_benchmark(args.variant, scale=args.scale, seed=args.seed or 0, horizon=args.horizon)
    if args.stride:
        sc = sc.with_overrides(stride=args.stride)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.yaml").write_text(serialize_scenario(sc))
    _print_report(run(sc, out, figures=not args.no_figures))
    return 0


def cmd_validate(args):
    sc = load_scenario(args.scenario, validate=False)
    issues = validate_scenario(sc)
    for a, d in issues:
        print(f"FAIL {a}: {d}")
    if not issues:
        print(f"OK {sc.name}: {sc.n} agents, dimension {sc.dimension}, family {sc.family}")
    return 1 if issues else 0


def cmd_oracle(args):
    sc = load_scenario(args.scenario)
    x = centralized_oracle(sc.objectives, sc.sets, x0=sc.feasible_point, iters=args.iters)
    print("reference optimum: [" + ", ".join(format(v, ".12g") for v in np.atleast_1d(x)) + "]")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="distopt", description="Distributed constrained consensus optimization.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--stride", type=int)
    r.add_argument("--horizon", type=float)
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("builtin", help="run a built-in scenario")
    b.add_argument("name", choices=["sec5"], help="sec5: the 24-agent ring benchmark")
    b.add_argument("--variant", choices=VARIANTS, default="ct")
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--stride", type=int)
    b.add_argument("--horizon", type=float)
    b.add_argument("--scale", type=float, default=1.0, help="scale the initial-state box")
    b.add_argument("--no-figures", action="store_true")
    b.set_defaults(func=cmd_builtin)

    v = sub.add_parser("validate", help="check a scenario against the assumptions")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="centralized reference optimum")
    o.add_argument("scenario")
    o.add_argument("--iters", type=int, default=50000)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("DISTOPT_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioValidationError as err:
        print(err, file=sys.stderr)
        return 3
    except ScenarioParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return 2
    except DistoptError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
