"""Topology families and the pinned games used by the experiments."""
import logging
import os
import random
from dataclasses import dataclass, field

import networkx as nx

from core import (
    BLUE,
    RED,
    STRATEGIC,
    STUBBORN,
    Agent,
    Assignment,
    GameInstance,
    Topology,
    check_assignment,
    game_from_dict,
    game_from_types,
    load_game,
)
from equilibria import build_gadget
from errors import FixtureMissing, InfeasibleParameters, InvalidInstance, InvalidTopology, JumpGameError

logger = logging.getLogger(__name__)

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")
POS_FIXTURE = os.path.join(FIXTURE_DIR, "pos_fixture.json")

REGULAR_ATTEMPTS = 1000


# ---------------------------------------------------------
# Topology families
# ---------------------------------------------------------

def gen_line(nodes):
    if nodes < 2:
        raise InfeasibleParameters(f"a line needs at least 2 nodes, got {nodes}")
    return Topology.from_edges(nodes, [(i, i + 1) for i in range(nodes - 1)])


def gen_cycle(nodes):
    if nodes < 3:
        raise InfeasibleParameters(f"a cycle needs at least 3 nodes, got {nodes}")
    return Topology.from_edges(nodes, [(i, (i + 1) % nodes) for i in range(nodes)])


def gen_star(leaves):
    """Centre 0, leaves 1..leaves."""
    if leaves < 1:
        raise InfeasibleParameters(f"a star needs at least one leaf, got {leaves}")
    return Topology.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def gen_spider(leg_lengths):
    """Centre 0; legs follow one another, each numbered outwards from the centre."""
    leg_lengths = list(leg_lengths)
    if len(leg_lengths) < 3:
        raise InfeasibleParameters(f"a spider needs at least 3 legs, got {len(leg_lengths)}")
    if any(length < 1 for length in leg_lengths):
        raise InfeasibleParameters(f"leg lengths must be positive, got {leg_lengths}")
    edges = []
    nxt = 1
    for length in leg_lengths:
        previous = 0
        for _ in range(length):
            edges.append((previous, nxt))
            previous = nxt
            nxt += 1
    return Topology.from_edges(nxt, edges)


def _pair_stubs(nodes, degree, rng):
    stubs = [v for v in range(nodes) for _ in range(degree)]
    rng.shuffle(stubs)
    edges = set()
    pairs = iter(stubs)
    for s1, s2 in zip(pairs, pairs):
        if s1 > s2:
            s1, s2 = s2, s1
        if s1 == s2 or (s1, s2) in edges:
            return None
        edges.add((s1, s2))
    return edges


def gen_regular(nodes, degree, seed=None, connected=True):
    """Seeded stub matching; samples with loops, multi-edges or (optionally) several components restart."""
    if (nodes * degree) % 2 != 0:
        raise InfeasibleParameters("nodes * degree must be even")
    if not 0 < degree < nodes:
        raise InfeasibleParameters(f"degree {degree} needs 0 < degree < nodes={nodes}")
    rng = random.Random(seed)
    for attempt in range(1, REGULAR_ATTEMPTS + 1):
        edges = _pair_stubs(nodes, degree, rng)
        if edges is None:
            continue
        topology = Topology.from_edges(nodes, sorted(edges))
        if connected and not topology.is_connected():
            continue
        logger.debug("%d-regular graph on %d nodes after %d attempts", degree, nodes, attempt)
        return topology
    raise InfeasibleParameters(f"no {degree}-regular graph on {nodes} nodes in {REGULAR_ATTEMPTS} attempts")


def gen_tree(nodes, seed=None):
    """Uniformly random labelled tree drawn from a seeded Pruefer sequence."""
    if nodes < 2:
        raise InfeasibleParameters(f"a tree needs at least 2 nodes, got {nodes}")
    if nodes == 2:
        return Topology.from_edges(2, [(0, 1)])
    rng = random.Random(seed)
    sequence = [rng.randrange(nodes) for _ in range(nodes - 2)]
    return Topology.from_networkx(nx.from_prufer_sequence(sequence))


# ---------------------------------------------------------
# Price of anarchy and stability constructions
# ---------------------------------------------------------

def _line_game(sequence, num_types):
    """Line laid out by ``sequence`` (a type per node, None for empty); agents numbered left to right."""
    topology = gen_line(len(sequence))
    types = [t for t in sequence if t is not None]
    game = game_from_types(topology, num_types, types)
    nodes = [v for v, t in enumerate(sequence) if t is not None]
    return game, Assignment.of(dict(enumerate(nodes)))


def _line_equilibrium_pattern(n):
    r, b = RED, BLUE
    if n % 4 == 2:
        pairs, tail = (n - 4) // 2, [b, r]
    else:
        pairs, tail = (n - 4) // 2 - 1, [b, r, r, b]
    middle = []
    for i in range(pairs):
        middle += [b, b] if i % 2 == 0 else [r, r]
    return [r] + middle + [r, None] + tail


def gen_poa_line_equilibrium(n):
    """Two equal types on a line of n+1 nodes in the low-welfare equilibrium r b b r r ... b b r v b r."""
    if n < 8 or n % 2:
        raise InfeasibleParameters(f"the line pattern needs an even n >= 8, got {n}")
    return _line_game(_line_equilibrium_pattern(n), 2)


def gen_poa_line_optimum(n, k=2):
    """Types 1..k cycling along the line with the last node empty; every agent has utility 1."""
    if k < 2 or n % k:
        raise InfeasibleParameters(f"n={n} must be a multiple of k={k} >= 2")
    return _line_game([i % k + 1 for i in range(n)] + [None], k)


def gen_poa_line_ktypes(n, k):
    """Types 1..k-1 cycling n/k times, then the n/k agents of type k, then the empty node."""
    if k < 3 or n % k or n // k < 2:
        raise InfeasibleParameters(f"need k >= 3 dividing n with n/k >= 2, got n={n}, k={k}")
    block = n // k
    sequence = [i % (k - 1) + 1 for i in range(block * (k - 1))] + [k] * block + [None]
    return _line_game(sequence, k)


def gen_star_asymmetric(n, k):
    """Star on n+1 nodes; red has n-k+1 agents, types 2..k one agent each."""
    if not 2 <= k <= n:
        raise InfeasibleParameters(f"need 2 <= k <= n, got n={n}, k={k}")
    types = [RED] * (n - k + 1) + list(range(2, k + 1))
    return game_from_types(gen_star(n), k, types)


def gen_star_assignment(n, k, center_type):
    """An agent of ``center_type`` on the centre, the rest on leaves 1.. in id order; the last leaf stays empty."""
    game = gen_star_asymmetric(n, k)
    if not 1 <= center_type <= k:
        raise InfeasibleParameters(f"centre type {center_type} outside 1..{k}")
    center = next(a.id for a in game.agents if a.type == center_type)
    others = [a.id for a in game.agents if a.id != center]
    placement = {center: 0}
    placement.update(zip(others, range(1, n)))
    return game, Assignment.of(placement)


def load_pos_fixture(path=POS_FIXTURE):
    if not os.path.exists(path):
        raise FixtureMissing(f"price of stability fixture not found at {path}")
    return load_game(path)


# ---------------------------------------------------------
# Improving-response cycle witnesses
# ---------------------------------------------------------

def gen_tree_irc_witness(strategic_leaves=False):
    """Hub path 0-1-2 with leaves; reds start on hubs 1 and 2, hub 0 is the single empty node."""
    x, y, z = 0, 1, 2
    leaves = [(x, BLUE), (y, BLUE), (y, BLUE), (y, BLUE), (y, BLUE),
              (z, BLUE), (z, BLUE), (z, BLUE), (z, RED)]
    edges = [(x, y), (y, z)] + [(hub, 3 + i) for i, (hub, _) in enumerate(leaves)]
    topology = Topology.from_edges(3 + len(leaves), edges)

    kind = STRATEGIC if strategic_leaves else STUBBORN
    agents = [Agent(0, RED), Agent(1, RED)]
    placement = {0: y, 1: z}
    for i, (_, type_id) in enumerate(leaves):
        node = 3 + i
        agents.append(Agent(2 + i, type_id, kind, node if kind == STUBBORN else None))
        placement[2 + i] = node
    game = GameInstance(topology, 2, tuple(agents))
    return game, check_assignment(game, Assignment.of(placement))


REGULAR_WITNESS_EDGES = [
    (0, 1), (0, 2), (0, 3), (0, 5), (1, 2), (2, 3), (2, 5), (1, 6), (1, 7), (3, 6),
    (3, 7), (4, 6), (4, 7), (4, 8), (4, 9), (5, 8), (5, 9), (6, 8), (7, 9), (8, 9),
]


def gen_regular_irc_witness():
    """4-regular game on 10 nodes, one strategic red and one strategic blue, four empty nodes."""
    topology = Topology.from_edges(10, REGULAR_WITNESS_EDGES)
    agents = (
        Agent(0, 1),
        Agent(1, 2),
        Agent(2, 1, STUBBORN, 6),
        Agent(3, 2, STUBBORN, 7),
        Agent(4, 3, STUBBORN, 8),
        Agent(5, 3, STUBBORN, 9),
    )
    game = GameInstance(topology, 3, agents)
    return game, check_assignment(game, Assignment.of({0: 0, 1: 4, 2: 6, 3: 7, 4: 8, 5: 9}))


def gen_regular_irc_lift(game, start, mover=None):
    """Same cycle one degree higher: the topology doubled, every node joined to its copy.

    Copies hold stubborn agents of a new type, except the copy of the mover's
    start node, which stays empty. ``mover`` defaults to the first strategic
    agent; the original agents keep their ids and nodes.
    """
    topology = game.topology
    degree = topology.regular_degree()
    if degree is None:
        raise InvalidTopology("lifting needs a regular topology")
    check_assignment(game, start)
    if mover is None:
        if not game.strategic_agents:
            raise InvalidInstance("lifting needs a strategic agent to move")
        mover = game.strategic_agents[0].id
    elif not game.agent(mover).strategic:
        raise InvalidInstance(f"agent {mover} is stubborn and cannot be the mover")

    size = topology.node_count
    edges = list(topology.sorted_edges)
    edges += [(u + size, v + size) for u, v in topology.sorted_edges]
    edges += [(v, v + size) for v in range(size)]
    hole = start.node_of(mover) + size
    extra_type = game.num_types + 1
    first_id = max(a.id for a in game.agents) + 1
    copies = [v for v in range(size, 2 * size) if v != hole]
    added = [Agent(first_id + i, extra_type, STUBBORN, v) for i, v in enumerate(copies)]

    lifted = GameInstance(Topology.from_edges(2 * size, edges), extra_type, game.agents + tuple(added))
    placement = dict(start.placement)
    placement.update((a.id, a.node) for a in added)
    logger.debug("lifted %d-regular game on %d nodes to degree %d", degree, size, degree + 1)
    return lifted, check_assignment(lifted, Assignment.of(placement))


# ---------------------------------------------------------
# Instance specs
# ---------------------------------------------------------

TOPOLOGY_FAMILIES = ("line", "cycle", "star", "spider", "tree_random", "regular")
FAMILIES = TOPOLOGY_FAMILIES + (
    "gadget", "pos_fixture", "custom", "poa_line", "poa_line_optimum", "poa_line_ktypes",
    "star_asymmetric", "star_assignment", "tree_irc_witness", "regular_irc_witness",
)


@dataclass
class InstanceSpec:
    family: str
    parameters: dict = field(default_factory=dict)
    type_profile: list = field(default_factory=list)  # [(type, strategic count, stubborn count)]

    @classmethod
    def from_dict(cls, data):
        try:
            profile = [tuple(int(x) for x in row) for row in data.get("type_profile", [])]
            spec = cls(str(data["family"]), dict(data.get("parameters", {})), profile)
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise InvalidInstance(f"malformed instance spec: {e!r}") from e
        if spec.family not in FAMILIES:
            raise InvalidInstance(f"unknown family {spec.family!r}, expected one of {FAMILIES}")
        if any(len(row) != 3 for row in profile):
            raise InvalidInstance("type profile rows must be (type, strategic, stubborn)")
        return spec

    def to_dict(self):
        return {"family": self.family, "parameters": self.parameters,
                "type_profile": [list(row) for row in self.type_profile]}


def _topology_for(spec):
    p = spec.parameters
    if spec.family == "line":
        return gen_line(p["nodes"])
    if spec.family == "cycle":
        return gen_cycle(p["nodes"])
    if spec.family == "star":
        return gen_star(p["leaves"])
    if spec.family == "spider":
        return gen_spider(p["legs"])
    if spec.family == "tree_random":
        return gen_tree(p["nodes"], p.get("seed"))
    return gen_regular(p["nodes"], p["degree"], p.get("seed"))


def _populate(spec, topology):
    """Agents from the type profile; stubborn agents go to seeded random distinct nodes."""
    if not spec.type_profile:
        raise InvalidInstance(f"family {spec.family!r} needs a type profile")
    num_types = int(spec.parameters.get("k", max(row[0] for row in spec.type_profile)))
    stubborn_types = [t for t, _, stubborn in spec.type_profile for _ in range(stubborn)]
    if len(stubborn_types) > topology.node_count:
        raise InfeasibleParameters("more stubborn agents than nodes")
    rng = random.Random(spec.parameters.get("seed"))
    nodes = sorted(rng.sample(range(topology.node_count), len(stubborn_types)))
    agents = [Agent(i, t) for i, t in enumerate(t for t, strategic, _ in spec.type_profile
                                                 for _ in range(strategic))]
    agents += [Agent(len(agents) + i, t, STUBBORN, v) for i, (t, v) in enumerate(zip(stubborn_types, nodes))]
    return GameInstance(topology, num_types, tuple(agents))


def build_instance(spec):
    """Game for an InstanceSpec, plus the quoted assignment for families that come with one (else None)."""
    p = spec.parameters
    try:
        if spec.family in TOPOLOGY_FAMILIES:
            return _populate(spec, _topology_for(spec)), None
        if spec.family == "gadget":
            return build_gadget(p["h_edges"], p["s"], p.get("h_vertices")), None
        if spec.family == "pos_fixture":
            return load_pos_fixture(), None
        if spec.family == "custom":
            return game_from_dict(p["game"]), None
        if spec.family == "poa_line":
            return gen_poa_line_equilibrium(p["n"])
        if spec.family == "poa_line_optimum":
            return gen_poa_line_optimum(p["n"], p.get("k", 2))
        if spec.family == "poa_line_ktypes":
            return gen_poa_line_ktypes(p["n"], p["k"])
        if spec.family == "star_asymmetric":
            return gen_star_asymmetric(p["n"], p["k"]), None
        if spec.family == "star_assignment":
            return gen_star_assignment(p["n"], p["k"], p.get("center_type", BLUE))
        if spec.family == "tree_irc_witness":
            return gen_tree_irc_witness(bool(p.get("strategic_leaves", False)))
        lifts = int(p.get("lifts", 0))
        if lifts < 0:
            raise InfeasibleParameters(f"lifts must be non-negative, got {lifts}")
        game, start = gen_regular_irc_witness()
        for _ in range(lifts):
            game, start = gen_regular_irc_lift(game, start)
        return game, start
    except JumpGameError:
        raise
    except KeyError as e:
        raise InvalidInstance(f"family {spec.family!r} is missing parameter {e}") from e
    except (TypeError, ValueError) as e:
        raise InvalidInstance(f"family {spec.family!r} has a malformed parameter: {e}") from e
