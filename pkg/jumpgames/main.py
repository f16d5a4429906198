# main.py
"""Command line for the jump games lab.

    python ./jumpgames/main.py <command> [options]

Commands: gen, ird, check-eq, solve-tree, brute, find-irc, poa-suite.
Run a command with --help for its options. Exit codes are listed in EXIT_CODES.
"""
import argparse
import json
import logging
import os
import sys
from fractions import Fraction

import pandas as pd

from config_parser import load_config
from core import (
    DIVERSITY,
    UTILITY_MODES,
    assignment_to_dict,
    format_rational,
    load_assignment,
    load_game,
    parse_rational,
    random_assignment,
    save_assignment,
    save_game,
    social_welfare,
)
from dynamics import POLICIES, PotentialConfig, RunStatus, run_ird, write_trace
from equilibria import brute_force, construct_tree_equilibrium, find_irc, is_equilibrium, report_to_dict
from errors import InvalidInstance, JumpGameError, SuiteUsageError
from instances import (
    InstanceSpec,
    build_instance,
    gen_poa_line_equilibrium,
    gen_poa_line_ktypes,
    gen_star_asymmetric,
    load_pos_fixture,
)

logger = logging.getLogger("jumpgames")

EXIT_CODES = {
    "ok": 0,
    "usage": 2,
    "invalid_input": 3,
    "cycle": 4,
    "step_limit": 5,
    "budget": 6,
    "tree_preconditions": 7,
    "verification": 8,
    "not_equilibrium": 9,
    "suite_failed": 10,
    "no_cycle": 11,
}

RUN_EXIT = {
    RunStatus.CONVERGED: EXIT_CODES["ok"],
    RunStatus.CYCLE_DETECTED: EXIT_CODES["cycle"],
    RunStatus.STEP_LIMIT: EXIT_CODES["step_limit"],
}


# ---------------------------------------------------------
# Helpers
# ---------------------------------------------------------

def potential_arg(text):
    try:
        return PotentialConfig(parse_rational(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def positive_int(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def human(value, decimals):
    """Exact p/q followed by a decimal approximation."""
    if value is None:
        return "-"
    return f"{format_rational(value)} ({float(value):.{decimals}f})"


def load_instance(args):
    """Game from --instance or --spec, with the assignment quoted by the spec's family if any."""
    if bool(args.instance) == bool(args.spec):
        raise InvalidInstance("give exactly one of --instance and --spec")
    if args.instance:
        return load_game(args.instance), None
    try:
        with open(args.spec, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInstance(f"cannot read spec {args.spec}: {e}") from e
    return build_instance(InstanceSpec.from_dict(data))


def write_json(data, path):
    text = json.dumps(data, indent=2) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def move_to_dict(move):
    return {
        "agent": move.agent,
        "from": move.source,
        "to": move.target,
        "u_before": format_rational(move.utility_before),
        "u_after": format_rational(move.utility_after),
    }


# ---------------------------------------------------------
# Commands
# ---------------------------------------------------------

def cmd_gen(args, config):
    game, assignment = load_instance(args)
    save_game(game, args.out)
    print(f"game with {game.topology.node_count} nodes and {game.n} agents written to {args.out}")
    if assignment is not None:
        path = os.path.splitext(args.out)[0] + ".assignment.json"
        save_assignment(assignment, path)
        print(f"quoted assignment written to {path}")
    return EXIT_CODES["ok"]


def _start_assignment(args, game, quoted, seed):
    if args.random_start:
        return random_assignment(game, seed)
    if args.start:
        return load_assignment(args.start, game)
    if quoted is not None:
        return quoted
    raise InvalidInstance("give --start, --random-start, or a spec whose family quotes an assignment")


def cmd_ird(args, config):
    game, quoted = load_instance(args)
    seed = args.seed if args.seed is not None else config["dynamics"]["seed"]
    start = _start_assignment(args, game, quoted, seed)
    policy = args.policy or config["dynamics"]["policy"]
    max_steps = args.max_steps or config["dynamics"]["max_steps"]
    potential_config = args.m or config.potential
    outcome = run_ird(game, start, policy=policy, max_steps=max_steps, seed=seed, mode=args.mode)
    if args.out:
        with open(args.out, "w") as f:
            write_trace(f, game, outcome, potential_config)
        decimals = config["output"]["decimals"]
        print(f"{outcome.status.value} after {outcome.steps} moves; "
              f"social welfare {human(social_welfare(game, outcome.final_assignment, args.mode), decimals)}")
    else:
        write_trace(sys.stdout, game, outcome, potential_config)
    return RUN_EXIT[outcome.status]


def cmd_check_eq(args, config):
    game, quoted = load_instance(args)
    assignment = load_assignment(args.start, game) if args.start else quoted
    if assignment is None:
        raise InvalidInstance("check-eq needs --start or a spec whose family quotes an assignment")
    ok, witness = is_equilibrium(game, assignment, args.mode)
    if ok:
        print("equilibrium: yes")
        return EXIT_CODES["ok"]
    print(f"equilibrium: no; agent {witness.agent} improves by jumping to node {witness.target} "
          f"({format_rational(witness.utility_current)} -> {format_rational(witness.utility_at_target)})")
    return EXIT_CODES["not_equilibrium"]


def cmd_solve_tree(args, config):
    game, _ = load_instance(args)
    assignment = construct_tree_equilibrium(game)
    if args.out:
        save_assignment(assignment, args.out)
    else:
        write_json(assignment_to_dict(assignment), None)
    print(f"social welfare {human(social_welfare(game, assignment), config['output']['decimals'])}")
    print("verified: equilibrium")
    return EXIT_CODES["ok"]


def cmd_brute(args, config):
    game, _ = load_instance(args)
    budget = args.budget or config["search"]["budget"]
    report = brute_force(game, budget, collect_equilibria=args.collect, mode=args.mode)
    write_json(report_to_dict(report), args.out)
    return EXIT_CODES["ok"]


def cmd_find_irc(args, config):
    game, _ = load_instance(args)
    budget = args.budget or config["search"]["irc_budget"]
    start = load_assignment(args.start, game) if args.start else None
    result = find_irc(game, budget, mode=args.mode, start=start)
    data = {"exhausted": result.exhausted, "states_explored": result.states_explored, "cycle": None}
    if result.cycle is not None:
        data["cycle"] = [move_to_dict(m) for m in result.cycle]
        data["start"] = assignment_to_dict(result.start)
    write_json(data, args.out)
    return EXIT_CODES["ok"] if result.cycle is not None else EXIT_CODES["no_cycle"]


# ---------------------------------------------------------
# Price of anarchy / stability battery
# ---------------------------------------------------------

def suite_rows(fixture_path=None):
    """(name, game factory, metric, expected) for every row of the battery."""
    def fixture():
        return load_pos_fixture(fixture_path) if fixture_path else load_pos_fixture()

    return [
        ("star n=5 k=2", lambda: gen_star_asymmetric(5, 2), "poa", Fraction(4)),
        ("star n=7 k=3", lambda: gen_star_asymmetric(7, 3), "poa", Fraction(3)),
        ("line n=8 k=2", lambda: gen_poa_line_equilibrium(8)[0], "poa", Fraction(4, 3)),
        ("line n=6 k=3", lambda: gen_poa_line_ktypes(6, 3)[0], "poa", Fraction(4, 3)),
        ("pos fixture", fixture, "pos", Fraction(65, 62)),
    ]


def run_suite(rows, budget, decimals):
    records = []
    for name, factory, metric, expected in rows:
        try:
            report = brute_force(factory(), budget)
            observed = getattr(report, metric)
            states = report.total_states_examined
            error = ""
        except JumpGameError as e:
            observed, states, error = None, None, str(e)
        passed = observed is not None and observed == expected
        logger.info("suite row %s: %s expected %s observed %s", name, metric, expected, observed)
        records.append({
            "row": name,
            "metric": metric,
            "expected": format_rational(expected),
            "observed": format_rational(observed) if observed is not None else "",
            "approx": f"{float(observed):.{decimals}f}" if observed is not None else "",
            "states": states,
            "pass": passed,
            "error": error,
        })
    return pd.DataFrame.from_records(records)


def cmd_poa_suite(args, config):
    rows = suite_rows(args.fixture)
    if args.rows is not None:
        rows = [r for r in rows if r[0] in args.rows]
    if not rows:
        raise SuiteUsageError("no battery rows selected")
    budget = args.budget or config["search"]["budget"]
    table = run_suite(rows, budget, config["output"]["decimals"])
    print(table.drop(columns=["error"]).to_string(index=False))
    if args.out:
        table.drop(columns=["approx"]).to_csv(args.out, index=False)
    failed = table.loc[~table["pass"], "row"].tolist()
    if failed:
        for name in failed:
            print(f"FAILED: {name}", file=sys.stderr)
        return EXIT_CODES["suite_failed"]
    return EXIT_CODES["ok"]


# ---------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="jumpgames", description="Diversity-seeking jump games lab")
    parser.add_argument("--config", help="YAML config file (default: $JUMPGAMES_CONFIG)")
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, instance=True):
        sub = commands.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        if instance:
            sub.add_argument("--instance", help="game JSON file")
            sub.add_argument("--spec", help="instance spec JSON file")
        return sub

    gen = add("gen", cmd_gen, "build a game from an instance spec")
    gen.add_argument("--out", required=True)

    ird = add("ird", cmd_ird, "run improving-response dynamics")
    ird.add_argument("--start", help="start assignment JSON file")
    ird.add_argument("--random-start", action="store_true")
    ird.add_argument("--policy", choices=POLICIES)
    ird.add_argument("--seed", type=int, help="random start and random policy seed (default: dynamics.seed)")
    ird.add_argument("--max-steps", type=positive_int)
    ird.add_argument("--m", type=potential_arg, help="potential parameter as p/q, 0 < m < 1")
    ird.add_argument("--out", help="trace file (JSON lines); stdout when omitted")

    check = add("check-eq", cmd_check_eq, "test whether an assignment is an equilibrium")
    check.add_argument("--start", help="assignment JSON file")

    tree = add("solve-tree", cmd_solve_tree, "construct an equilibrium on a tree")
    tree.add_argument("--out")

    brute = add("brute", cmd_brute, "enumerate every class state")
    brute.add_argument("--budget", type=positive_int)
    brute.add_argument("--collect", action="store_true", help="list every equilibrium class state")
    brute.add_argument("--out")

    irc = add("find-irc", cmd_find_irc, "search for an improving-response cycle")
    irc.add_argument("--budget", type=positive_int)
    irc.add_argument("--start", help="search only states reachable from this assignment")
    irc.add_argument("--out")

    suite = add("poa-suite", cmd_poa_suite, "run the price of anarchy / stability battery", instance=False)
    suite.add_argument("--budget", type=positive_int)
    suite.add_argument("--fixture", help="alternative price of stability fixture")
    suite.add_argument("--rows", nargs="*", help="run only the named rows")
    suite.add_argument("--out", help="CSV summary file")

    for sub in (ird, check, brute, irc):
        sub.add_argument("--mode", choices=UTILITY_MODES, default=DIVERSITY)
    return parser


def main(argv):
    parser = build_parser()
    args = parser.parse_args(argv[1:])
    try:
        config = load_config(args.config)
    except JumpGameError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    logging.basicConfig(level=config["logging"]["level"], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args, config)
    except SuiteUsageError as e:
        parser.error(str(e))
    except JumpGameError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main(sys.argv))
