from fractions import Fraction

import pytest

from core import Assignment, social_welfare
from equilibria import brute_force, is_equilibrium
from instances import (
    POS_FIXTURE,
    gen_poa_line_equilibrium,
    gen_poa_line_ktypes,
    gen_poa_line_optimum,
    gen_star_asymmetric,
    gen_star_assignment,
    load_pos_fixture,
)
from tools import build_pos_fixture

BUDGET = 10**6


@pytest.mark.parametrize("n, k, opt, poa", [
    (5, 2, 5, Fraction(4)),
    (7, 3, 7, Fraction(3)),
])
def test_star_price_of_anarchy(n, k, opt, poa):
    report = brute_force(gen_star_asymmetric(n, k), BUDGET)
    assert report.opt_welfare == opt
    assert report.poa == poa


@pytest.mark.parametrize("n, k", [(5, 2), (7, 3), (6, 4)])
def test_non_red_centre_reaches_the_optimum(n, k):
    game, assignment = gen_star_assignment(n, k, 2)
    assert social_welfare(game, assignment) == n
    assert is_equilibrium(game, assignment)[0]


@pytest.mark.parametrize("n, welfare", [(8, 6), (10, 7), (12, 8)])
def test_line_equilibrium_welfare(n, welfare):
    game, assignment = gen_poa_line_equilibrium(n)
    assert social_welfare(game, assignment) == welfare
    assert is_equilibrium(game, assignment) == (True, None)


@pytest.mark.parametrize("n, k", [(8, 2), (9, 3), (12, 4)])
def test_line_optimum_gives_everyone_utility_one(n, k):
    game, assignment = gen_poa_line_optimum(n, k)
    assert social_welfare(game, assignment) == n


@pytest.mark.parametrize("n, k, welfare", [(6, 3, Fraction(9, 2)), (8, 4, Fraction(13, 2))])
def test_line_with_k_types(n, k, welfare):
    game, assignment = gen_poa_line_ktypes(n, k)
    assert social_welfare(game, assignment) == welfare
    assert is_equilibrium(game, assignment)[0]


@pytest.mark.parametrize("factory, poa", [
    (lambda: gen_poa_line_equilibrium(8)[0], Fraction(4, 3)),
    (lambda: gen_poa_line_ktypes(6, 3)[0], Fraction(4, 3)),
])
def test_line_price_of_anarchy(factory, poa):
    report = brute_force(factory(), BUDGET)
    assert report.poa == poa


def test_price_of_stability_fixture():
    game = load_pos_fixture()
    report = brute_force(game, BUDGET)
    assert report.total_states_examined == 105
    assert report.opt_welfare == Fraction(65, 12)
    assert report.max_eq_welfare == Fraction(62, 12)
    assert report.pos == Fraction(65, 62)


def test_price_of_stability_fixture_optimum_is_unstable():
    game = load_pos_fixture()
    optimum = Assignment.of({0: 1, 1: 6, 2: 0, 3: 2, 4: 3, 5: 4})
    assert social_welfare(game, optimum) == Fraction(65, 12)
    ok, witness = is_equilibrium(game, optimum)
    assert not ok
    assert (witness.agent, witness.target) == (0, 5)
    assert (witness.utility_current, witness.utility_at_target) == (Fraction(2, 3), Fraction(3, 4))


def test_price_of_stability_fixture_best_equilibrium():
    game = load_pos_fixture()
    best = Assignment.of({0: 0, 1: 6, 2: 1, 3: 2, 4: 3, 5: 4})
    assert social_welfare(game, best) == Fraction(31, 6)
    assert is_equilibrium(game, best) == (True, None)


def test_fixture_rebuild_reproduces_the_pinned_file(tmp_path, capsys):
    out = tmp_path / "rebuilt.json"
    assert build_pos_fixture.main(["build_pos_fixture.py", str(out)]) == 0
    assert "Unique match" in capsys.readouterr().out
    with open(POS_FIXTURE) as f:
        assert out.read_text() == f.read()


def test_fixture_rebuild_candidates_keep_e1_and_e2_interchangeable():
    candidates = list(build_pos_fixture.candidate_edge_sets())
    assert len(candidates) == 8
    for edges in candidates:
        assert {build_pos_fixture.mirrored(e) for e in edges} == set(edges)
