"""Command-line entry point.

Exit codes: 0 success, 1 reproduction verdict mismatch, 2 invalid input,
3 no equilibrium found (non-convergence, or proven absent), 4 enumeration
guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from typing import Sequence

import numpy as np

from . import repro
from .continuous import DynamicsConfig
from .errors import BestResponseNotAttained, ExplosionGuard, InvalidInstance
from .io import load_instance, load_profile, profile_to_dict, write_json
from .model import DiscreteAssignment, check_profile, expected_utility
from .solve import SOLVERS, describe_shape, solve
from .verify import epsilon_nash_check, monte_carlo_utilities, nonexistence_grid_audit

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_NO_EQUILIBRIUM, EXIT_GUARD = 0, 1, 2, 3, 4

log = logging.getLogger("chinese_auction")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance JSON file")
    common.add_argument("--out", help="write a JSON result file here")
    common.add_argument("--threads", type=_positive(int), default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    dyn = argparse.ArgumentParser(add_help=False)
    dyn.add_argument("--theta", type=float, default=0.5, help="damping of best-response dynamics")
    dyn.add_argument("--max-rounds", type=int, default=10_000)
    dyn.add_argument("--solver", choices=SOLVERS, help="override the auto-detected solver")

    parser = argparse.ArgumentParser(prog="chinese-auction", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common, dyn], help="compute and certify an equilibrium")
    p.add_argument("--epsilon", type=float, default=1e-9)

    p = sub.add_parser("verify", parents=[common], help="certify a given profile")
    p.add_argument("--profile", help="profile or result JSON file")
    p.add_argument("--epsilon", type=float, default=1e-9)

    p = sub.add_parser("audit", parents=[common], help="grid audit for equilibrium non-existence")
    p.add_argument("--grid", type=_positive(float), default=0.01, help="profile grid step h")
    p.add_argument("--dev-grid", type=_positive(float), default=0.001, help="deviation grid step")
    p.add_argument("--epsilon", type=float, default=1e-3, help="bound used with --expect-equilibrium")
    p.add_argument(
        "--expect-equilibrium",
        action="store_true",
        help="pass when the minimum gap is at most --epsilon instead of positive",
    )
    p.add_argument("--csv", help="write every grid profile and its gap as CSV")

    p = sub.add_parser("simulate", parents=[common, dyn], help="Monte Carlo check of expected utilities")
    p.add_argument("--profile", help="profile file; solved from the instance when omitted")
    p.add_argument("--trials", type=_nonneg_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-9)

    p = sub.add_parser("repro", parents=[common], help="run a named reproduction")
    p.add_argument("name", nargs="?", choices=sorted(repro.REGISTRY))
    p.add_argument("--all", action="store_true")
    p.add_argument("--list", action="store_true")
    return parser


def _emit(args, result: dict) -> None:
    if args.out:
        write_json(result, args.out)


def _config(args) -> DynamicsConfig:
    return DynamicsConfig(max_rounds=args.max_rounds, theta=args.theta, epsilon=args.epsilon)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    shape = describe_shape(inst)
    outcome = solve(inst, args.solver, _config(args), args.threads)
    result = {"command": "solve", "shape": shape, "solver": outcome.solver, "note": outcome.note}
    print(f"shape: {shape}\nsolver: {outcome.solver}")
    if outcome.profile is None:
        print(outcome.note)
        _emit(args, result)
        return EXIT_NO_EQUILIBRIUM
    cert = outcome.certificate
    result.update(profile_to_dict(outcome.profile))
    result["utilities"] = expected_utility(inst, outcome.profile).tolist()
    result["certificate"] = cert.to_dict()
    result["rounds"] = outcome.rounds
    _emit(args, result)
    print(json.dumps(profile_to_dict(outcome.profile)))
    print(f"epsilon: {cert.epsilon:.6g}")
    if outcome.note:
        print(outcome.note)
    if isinstance(outcome.profile, DiscreteAssignment):
        return EXIT_OK if cert.is_exact_nash else EXIT_NO_EQUILIBRIUM
    return EXIT_OK if cert.epsilon <= args.epsilon else EXIT_NO_EQUILIBRIUM


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    if not args.profile:
        raise InvalidInstance(["verify needs --profile"])
    x = load_profile(args.profile)
    problems = check_profile(inst, x)
    if problems:
        raise InvalidInstance(problems)
    cert = epsilon_nash_check(inst, x)
    _emit(args, {"command": "verify", "certificate": cert.to_dict()})
    print(f"method: {cert.method}\ngaps: {[float(g) for g in cert.gaps]}\nepsilon: {cert.epsilon:.6g}")
    if isinstance(x, DiscreteAssignment):
        return EXIT_OK if cert.is_exact_nash else EXIT_NO_EQUILIBRIUM
    return EXIT_OK if cert.epsilon <= args.epsilon else EXIT_NO_EQUILIBRIUM


def cmd_audit(args) -> int:
    inst = load_instance(args.instance)
    if args.dev_grid > args.grid:
        raise InvalidInstance(["--dev-grid must not exceed --grid"])
    report = nonexistence_grid_audit(inst, args.grid, args.dev_grid)
    print(report.summary())
    print(f"witness: {report.witness.tolist()}")
    _emit(args, {"command": "audit", **report.to_dict()})
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x_{i}_{j}" for i in range(inst.n) for j in range(inst.m)] + ["gap"])
            writer.writerows(report.csv_rows())
    if args.expect_equilibrium:
        return EXIT_OK if report.min_gap <= args.epsilon else EXIT_MISMATCH
    return EXIT_OK if report.min_gap > 0 else EXIT_MISMATCH


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    if args.trials < 1:
        raise InvalidInstance(["--trials must be at least 1"])
    if args.profile:
        x = load_profile(args.profile)
        problems = check_profile(inst, x)
        if problems:
            raise InvalidInstance(problems)
    else:
        outcome = solve(inst, args.solver, _config(args), args.threads)
        if outcome.profile is None:
            print(outcome.note)
            return EXIT_NO_EQUILIBRIUM
        x = outcome.profile
    mc = monte_carlo_utilities(inst, x, args.trials, args.seed, args.threads)
    exact = expected_utility(inst, x)
    band = 4 * mc.stderr
    ok = bool(np.all(np.abs(mc.mean - exact) <= band + 1e-12))
    for i, (e, mean, se) in enumerate(zip(exact, mc.mean, mc.stderr)):
        print(f"player {i}: exact {e:.6f} simulated {mean:.6f} +- {se:.6f}")
    _emit(args, {"command": "simulate", "exact": exact.tolist(), **mc.to_dict(), "within_band": ok})
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_repro(args) -> int:
    if args.list:
        for name, (desc, _) in repro.REGISTRY.items():
            print(f"{name:15s} {desc}")
        return EXIT_OK
    if args.all:
        names = list(repro.REGISTRY)
    elif args.name:
        names = [args.name]
    else:
        raise InvalidInstance(["repro needs a name, --all or --list"])
    failed = 0
    results = {}
    for name in names:
        ok, msg = repro.run(name)
        results[name] = {"ok": ok, "message": msg}
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {msg}")
    _emit(args, {"command": "repro", "results": results})
    return EXIT_MISMATCH if failed else EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "audit": cmd_audit,
    "simulate": cmd_simulate,
    "repro": cmd_repro,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command != "repro" and not args.instance:
        print("error: --instance is required", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (InvalidInstance, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BestResponseNotAttained as exc:
        print(f"no equilibrium: {exc}", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except ExplosionGuard as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
