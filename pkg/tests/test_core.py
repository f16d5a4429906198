import random
from fractions import Fraction

import pytest

from core import (
    EMPTY,
    SIMILARITY,
    STUBBORN,
    Agent,
    Assignment,
    GameInstance,
    Topology,
    assignment_from_classes,
    check_assignment,
    class_key,
    format_rational,
    game_from_dict,
    game_from_types,
    load_assignment,
    load_game,
    neighbor_type_counts,
    random_assignment,
    save_assignment,
    save_game,
    similarity_utility,
    social_welfare,
    utility,
    utility_at,
    with_stubborn,
)
from errors import InvalidAssignment, InvalidInstance, InvalidTopology, UnknownNode
from instances import gen_cycle, gen_regular, gen_spider, gen_tree


@pytest.fixture
def tail_game(triangle_with_tail):
    return game_from_types(triangle_with_tail, 2, [1, 1, 2])


@pytest.fixture
def tail_assignment():
    return Assignment.of({0: 0, 1: 1, 2: 2})


@pytest.mark.parametrize("edges, message", [
    ([(0, 0)], "self-loop"),
    ([(0, 1), (1, 0)], "duplicate"),
    ([(0, 5)], "range"),
])
def test_topology_rejects_bad_edges(edges, message):
    with pytest.raises(InvalidTopology, match=message):
        Topology.from_edges(3, edges)


def test_topology_queries(triangle_with_tail):
    assert triangle_with_tail.neighbors(2) == (0, 1, 3)
    assert triangle_with_tail.degree(3) == 1
    assert triangle_with_tail.is_connected()
    assert not triangle_with_tail.is_tree()
    assert triangle_with_tail.regular_degree() is None
    assert gen_cycle(5).regular_degree() == 2
    with pytest.raises(UnknownNode):
        triangle_with_tail.neighbors(9)


@pytest.mark.parametrize("num_types, agents, nodes", [
    (1, [Agent(0, 1), Agent(1, 1)], 3),
    (2, [Agent(0, 1)], 3),
    (2, [Agent(0, 1), Agent(1, 2)], 2),
    (2, [Agent(0, 1), Agent(1, 3)], 3),
    (2, [Agent(0, 1), Agent(0, 2)], 3),
    (2, [Agent(0, 1), Agent(1, 2, STUBBORN)], 3),
    (2, [Agent(0, 1, STUBBORN, 1), Agent(1, 2, STUBBORN, 1)], 3),
    (2, [Agent(0, 1, node=1), Agent(1, 2)], 3),
])
def test_game_instance_validation(num_types, agents, nodes):
    topology = Topology.from_edges(nodes, [(i, i + 1) for i in range(nodes - 1)])
    with pytest.raises(InvalidInstance):
        GameInstance(topology, num_types, tuple(agents))


def test_utility_and_welfare(tail_game, tail_assignment):
    assert utility(tail_game, tail_assignment, 0) == Fraction(1, 2)
    assert utility(tail_game, tail_assignment, 1) == Fraction(1, 2)
    assert utility(tail_game, tail_assignment, 2) == 1
    assert social_welfare(tail_game, tail_assignment) == 2
    assert similarity_utility(tail_game, tail_assignment, 2) == 0
    assert social_welfare(tail_game, tail_assignment, SIMILARITY) == 1


def test_neighbor_type_counts(tail_game, tail_assignment):
    assert neighbor_type_counts(tail_game, tail_assignment, 2) == {1: 2}
    assert neighbor_type_counts(tail_game, tail_assignment, 3) == {2: 1}
    assert neighbor_type_counts(tail_game, tail_assignment, 0) == {1: 1, 2: 1}


def test_isolated_agent_has_zero_utility_in_both_modes(path3_game):
    assignment = Assignment.of({0: 0, 1: 2})
    assert utility(path3_game, assignment, 0) == 0
    assert similarity_utility(path3_game, assignment, 0) == 0


def test_target_utility_ignores_vacated_source(path3_game):
    classes = class_key(path3_game, Assignment.of({0: 0, 1: 2}))
    # agent at 0 jumping to 1 would see only the other type at 2
    assert utility_at(path3_game.topology, classes, 1, 1, vacated=0) == 1


def test_stubborn_agents_do_not_count_towards_welfare(tail_game, tail_assignment):
    frozen = with_stubborn(tail_game, tail_assignment, [2])
    assert frozen.agent(2).kind == STUBBORN
    assert frozen.agent(2).node == 2
    assert social_welfare(frozen, tail_assignment) == 1


def test_class_key_and_representative(tail_game, tail_assignment):
    swapped = Assignment.of({0: 1, 1: 0, 2: 2})
    key = class_key(tail_game, tail_assignment)
    assert key == (1, 1, 2, EMPTY)
    assert class_key(tail_game, swapped) == key
    assert assignment_from_classes(tail_game, key) == tail_assignment


@pytest.mark.parametrize("placement", [
    {0: 0, 1: 0, 2: 2},
    {0: 0, 1: 1},
    {0: 0, 1: 1, 2: 2, 7: 3},
    {0: 0, 1: 1, 2: 4},
])
def test_check_assignment_rejects(tail_game, placement):
    with pytest.raises(InvalidAssignment):
        check_assignment(tail_game, Assignment.of(placement))


def test_check_assignment_pins_stubborn_agents(tail_game, tail_assignment):
    frozen = with_stubborn(tail_game, tail_assignment, [2])
    with pytest.raises(InvalidAssignment, match="stubborn"):
        check_assignment(frozen, Assignment.of({0: 0, 1: 1, 2: 3}))


def test_random_assignment_is_seeded_and_valid(tail_game, tail_assignment):
    frozen = with_stubborn(tail_game, tail_assignment, [2])
    first = random_assignment(frozen, seed=7)
    assert first == random_assignment(frozen, seed=7)
    assert check_assignment(frozen, first).node_of(2) == 2


def test_game_and_assignment_files(tmp_path, tail_game, tail_assignment):
    frozen = with_stubborn(tail_game, tail_assignment, [1])
    save_game(frozen, tmp_path / "game.json")
    save_assignment(tail_assignment, tmp_path / "start.json")
    loaded = load_game(tmp_path / "game.json")
    assert loaded == frozen
    assert load_assignment(tmp_path / "start.json", loaded) == tail_assignment


@pytest.mark.parametrize("document", [
    {"nodes": 3, "edges": [[0, 1]], "k": 2},
    {"nodes": 3, "edges": [[0, 1]], "k": 2, "agents": [{"id": 0, "type": 1, "kind": "stubborn"},
                                                       {"id": 1, "type": 2}]},
    {"nodes": 3, "edges": [[0, 1]], "k": 2, "agents": [{"id": 0, "type": 1, "node": 2},
                                                       {"id": 1, "type": 2}]},
    {"nodes": 3, "edges": [[0, 1, 2]], "k": 2, "agents": [{"id": 0, "type": 1}, {"id": 1, "type": 2}]},
    {"nodes": 3, "edges": [[0, 1]], "k": 2, "agents": [{"id": "a", "type": 1}, {"id": 1, "type": 2}]},
    {"nodes": "three", "edges": [[0, 1]], "k": 2, "agents": [{"id": 0, "type": 1}, {"id": 1, "type": 2}]},
    {"nodes": 3, "edges": [[0, 1]], "k": 2, "agents": [0, 1]},
    [3, [[0, 1]]],
])
def test_malformed_game_documents(document):
    with pytest.raises(InvalidInstance):
        game_from_dict(document)


def test_unreadable_game_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(InvalidInstance):
        load_game(path)


def test_format_rational():
    assert format_rational(Fraction(4)) == "4/1"
    assert format_rational(Fraction(62, 12)) == "31/6"


def _sample_topologies(rng):
    yield gen_tree(rng.randint(3, 15), seed=rng.randrange(10**6))
    yield gen_cycle(rng.randint(3, 15))
    yield gen_spider([rng.randint(1, 4) for _ in range(rng.randint(3, 5))])
    yield gen_regular(10, 3, seed=rng.randrange(10**6))


def test_diversity_and_similarity_are_complements():
    rng = random.Random(11)
    samples = 0
    while samples < 100_000:
        for topology in _sample_topologies(rng):
            nodes = topology.node_count
            n = rng.randint(2, nodes - 1)
            k = rng.randint(2, 4)
            game = game_from_types(topology, k, [rng.randint(1, k) for _ in range(n)])
            classes = class_key(game, random_assignment(game, rng.randrange(10**6)))
            for node, occupant in enumerate(classes):
                if occupant == EMPTY:
                    continue
                diversity = utility_at(topology, classes, node, occupant)
                similarity = utility_at(topology, classes, node, occupant, mode=SIMILARITY)
                if any(classes[nb] != EMPTY for nb in topology.adjacency[node]):
                    assert diversity + similarity == 1
                else:
                    assert diversity == similarity == 0
                samples += 1


def test_an_isolated_empty_node_changes_no_utility(triangle_with_tail, tail_assignment):
    game = game_from_types(triangle_with_tail, 2, [1, 1, 2])
    padded = Topology.from_edges(5, triangle_with_tail.sorted_edges)
    padded_game = game_from_types(padded, 2, [1, 1, 2])
    for agent_id in range(3):
        assert utility(padded_game, tail_assignment, agent_id) == utility(game, tail_assignment, agent_id)
    assert social_welfare(padded_game, tail_assignment) == social_welfare(game, tail_assignment)
