#!/usr/bin/env python3
"""
Rebuild the price of stability fixture by constrained search.

Nodes are a=0, b=1, c=2, d1=3, d2=4, e1=5, e2=6 with two red and four blue
agents. a hangs off b alone, d1 and d2 are each joined to e1 and e2 only,
and e1-e2 is an edge. The remaining edges among b, c, e1 and e2 are tried in
every combination that keeps e1 and e2 interchangeable. A topology matches
when the optimum is 65/12 with b's red agent wanting e1 (2/3 -> 3/4), and
the best equilibrium is 62/12 with a red, b blue and e1 empty. The fixture
is written only if exactly one topology matches.

Usage:
    python jumpgames/tools/build_pos_fixture.py [output_json_path]

"""
import os
import sys
from fractions import Fraction
from itertools import combinations

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, ROOT)

from core import (  # noqa: E402
    BLUE,
    EMPTY,
    RED,
    Topology,
    assignment_from_classes,
    game_from_types,
    save_game,
    social_welfare,
)
from equilibria import brute_force, is_equilibrium  # noqa: E402

DEFAULT_OUT = os.path.join(ROOT, 'fixtures', 'pos_fixture.json')

A, B, C, D1, D2, E1, E2 = range(7)
FIXED = [(A, B), (E1, E2), (D1, E1), (D1, E2), (D2, E1), (D2, E2)]
OPTIONAL = [(B, C), (B, E1), (B, E2), (C, E1), (C, E2)]
MIRROR = {E1: E2, E2: E1}
TYPES = [RED, RED, BLUE, BLUE, BLUE, BLUE]

# occupant class per node a, b, c, d1, d2, e1, e2
OPTIMUM = (BLUE, RED, BLUE, BLUE, BLUE, EMPTY, RED)
BEST_EQUILIBRIUM = (RED, BLUE, BLUE, BLUE, BLUE, EMPTY, RED)

TARGET_OPT = Fraction(65, 12)
TARGET_MAX_EQ = Fraction(62, 12)


def mirrored(edge):
    u, v = (MIRROR.get(x, x) for x in edge)
    return min(u, v), max(u, v)


def candidate_edge_sets():
    for size in range(len(OPTIONAL) + 1):
        for chosen in combinations(OPTIONAL, size):
            edges = set(FIXED) | set(chosen)
            if {mirrored(e) for e in edges} == edges:
                yield sorted(edges)


def matches(game):
    report = brute_force(game, budget=10_000)
    if report.opt_welfare != TARGET_OPT or report.max_eq_welfare != TARGET_MAX_EQ:
        return False
    optimum = assignment_from_classes(game, OPTIMUM)
    best = assignment_from_classes(game, BEST_EQUILIBRIUM)
    if social_welfare(game, optimum) != TARGET_OPT or social_welfare(game, best) != TARGET_MAX_EQ:
        return False
    ok, witness = is_equilibrium(game, optimum)
    if ok or optimum.node_of(witness.agent) != B or witness.target != E1:
        return False
    if (witness.utility_current, witness.utility_at_target) != (Fraction(2, 3), Fraction(3, 4)):
        return False
    return is_equilibrium(game, best)[0]


def main(argv):
    out_path = argv[1] if len(argv) > 1 else DEFAULT_OUT
    tried = 0
    found = []
    for edges in candidate_edge_sets():
        topology = Topology.from_edges(7, edges)
        if not topology.is_connected():
            continue
        tried += 1
        game = game_from_types(topology, 2, TYPES)
        if matches(game):
            found.append(game)
    if len(found) != 1:
        print(f'{len(found)} of {tried} candidate topologies match; expected exactly one')
        return 1
    save_game(found[0], out_path)
    print(f'Unique match among {tried} topologies: {found[0].topology.sorted_edges}')
    print('Fixture written to', out_path)
    return 0


if __name__ == '__main__':
    sys.exit(main(sys.argv))
