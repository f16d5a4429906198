"""Game model: topologies, agents, assignments, utilities and welfare.

All values are exact (``fractions.Fraction``). Node ids are dense integers
``0..node_count-1`` and adjacency lists are sorted ascending, which is the
left-to-right order every rooted traversal in the package relies on.
"""
import json
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import networkx as nx

from errors import InvalidAssignment, InvalidInstance, InvalidTopology, JumpGameError, UnknownNode

logger = logging.getLogger(__name__)

Rational = Fraction
ZERO = Fraction(0)

STRATEGIC = "strategic"
STUBBORN = "stubborn"
AGENT_KINDS = (STRATEGIC, STUBBORN)

# Occupant classes: 0 is an empty node, +t a strategic agent of type t,
# -t a stubborn agent of type t.
EMPTY = 0

RED = 1
BLUE = 2

DIVERSITY = "diversity"
SIMILARITY = "similarity"
UTILITY_MODES = (DIVERSITY, SIMILARITY)


def format_rational(value):
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text):
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {text!r}") from e


def check_mode(mode):
    if mode not in UTILITY_MODES:
        raise ValueError(f"unknown utility mode {mode!r}, expected one of {UTILITY_MODES}")
    return mode


# ---------------------------------------------------------
# Topology
# ---------------------------------------------------------

@dataclass(frozen=True)
class Topology:
    """Undirected simple graph. Build it with ``Topology.from_edges``."""
    node_count: int
    edges: frozenset
    adjacency: tuple

    @classmethod
    def from_edges(cls, node_count, edges):
        node_count = int(node_count)
        if node_count < 1:
            raise InvalidTopology(f"node count must be positive, got {node_count}")
        neighbors = [set() for _ in range(node_count)]
        seen = set()
        for edge in edges:
            u, v = (int(x) for x in edge)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise InvalidTopology(f"edge ({u}, {v}) leaves the node range 0..{node_count - 1}")
            if u == v:
                raise InvalidTopology(f"self-loop at node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InvalidTopology(f"duplicate edge {key}")
            seen.add(key)
            neighbors[u].add(v)
            neighbors[v].add(u)
        return cls(node_count, frozenset(seen), tuple(tuple(sorted(n)) for n in neighbors))

    @classmethod
    def from_networkx(cls, graph):
        mapping = {node: i for i, node in enumerate(sorted(graph.nodes))}
        return cls.from_edges(len(mapping), [(mapping[u], mapping[v]) for u, v in graph.edges])

    @cached_property
    def sorted_edges(self):
        return sorted(self.edges)

    @cached_property
    def graph(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.sorted_edges)
        return g

    def check_node(self, node):
        if not isinstance(node, int) or not 0 <= node < self.node_count:
            raise UnknownNode(f"node {node!r} is not in 0..{self.node_count - 1}")
        return node

    def neighbors(self, node):
        return self.adjacency[self.check_node(node)]

    def degree(self, node):
        return len(self.neighbors(node))

    def is_connected(self):
        return nx.is_connected(self.graph)

    def is_tree(self):
        return nx.is_tree(self.graph)

    def regular_degree(self):
        """The common degree if every node has the same degree, else None."""
        degrees = {len(a) for a in self.adjacency}
        return degrees.pop() if len(degrees) == 1 else None


# ---------------------------------------------------------
# Agents and instances
# ---------------------------------------------------------

@dataclass(frozen=True)
class Agent:
    id: int
    type: int
    kind: str = STRATEGIC
    node: int = None  # stubborn agents only

    @property
    def strategic(self):
        return self.kind == STRATEGIC


@dataclass(frozen=True)
class GameInstance:
    topology: Topology
    num_types: int
    agents: tuple

    def __post_init__(self):
        agents = tuple(sorted((a if isinstance(a, Agent) else Agent(*a) for a in self.agents),
                              key=lambda a: a.id))
        object.__setattr__(self, "agents", agents)
        self._validate()

    def _validate(self):
        k = self.num_types
        if k < 2:
            raise InvalidInstance(f"need at least two types, got k={k}")
        n = len(self.agents)
        if n < 2:
            raise InvalidInstance(f"need at least two agents, got {n}")
        if self.topology.node_count <= n:
            raise InvalidInstance(
                f"{self.topology.node_count} nodes cannot host {n} agents with a node to spare")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != n:
            raise InvalidInstance("agent ids are not unique")
        placed = set()
        for a in self.agents:
            if not 1 <= a.type <= k:
                raise InvalidInstance(f"agent {a.id} has type {a.type} outside 1..{k}")
            if a.kind not in AGENT_KINDS:
                raise InvalidInstance(f"agent {a.id} has unknown kind {a.kind!r}")
            if a.kind == STUBBORN:
                if a.node is None:
                    raise InvalidInstance(f"stubborn agent {a.id} has no node")
                if not 0 <= a.node < self.topology.node_count:
                    raise InvalidInstance(f"stubborn agent {a.id} sits on unknown node {a.node}")
                if a.node in placed:
                    raise InvalidInstance(f"two stubborn agents share node {a.node}")
                placed.add(a.node)
            elif a.node is not None:
                raise InvalidInstance(f"strategic agent {a.id} must not carry a fixed node")

    @property
    def n(self):
        return len(self.agents)

    @cached_property
    def agent_by_id(self):
        return {a.id: a for a in self.agents}

    @cached_property
    def strategic_agents(self):
        return tuple(a for a in self.agents if a.kind == STRATEGIC)

    @cached_property
    def stubborn_agents(self):
        return tuple(a for a in self.agents if a.kind == STUBBORN)

    @cached_property
    def stubborn_placement(self):
        return {a.id: a.node for a in self.stubborn_agents}

    @cached_property
    def free_nodes(self):
        """Nodes not reserved for a stubborn agent, ascending."""
        taken = set(self.stubborn_placement.values())
        return tuple(v for v in range(self.topology.node_count) if v not in taken)

    @cached_property
    def strategic_counts(self):
        """Number of strategic agents per type, for types 1..k."""
        counts = {t: 0 for t in range(1, self.num_types + 1)}
        for a in self.strategic_agents:
            counts[a.type] += 1
        return counts

    def agent(self, agent_id):
        try:
            return self.agent_by_id[agent_id]
        except KeyError:
            raise InvalidAssignment(f"unknown agent {agent_id!r}") from None

    def type_sizes(self):
        sizes = {t: 0 for t in range(1, self.num_types + 1)}
        for a in self.agents:
            sizes[a.type] += 1
        return sizes


def game_from_types(topology, num_types, types, stubborn=None):
    """Agents 0..len(types)-1 with the given types; ``stubborn`` maps agent id to node."""
    stubborn = stubborn or {}
    agents = [Agent(i, t, STUBBORN, stubborn[i]) if i in stubborn else Agent(i, t)
              for i, t in enumerate(types)]
    return GameInstance(topology, num_types, tuple(agents))


# ---------------------------------------------------------
# Assignments
# ---------------------------------------------------------

@dataclass(frozen=True)
class Assignment:
    pairs: tuple

    @classmethod
    def of(cls, placement):
        return cls(tuple(sorted((int(a), int(v)) for a, v in dict(placement).items())))

    @cached_property
    def placement(self):
        return dict(self.pairs)

    @cached_property
    def occupants(self):
        return {v: a for a, v in self.pairs}

    def node_of(self, agent_id):
        try:
            return self.placement[agent_id]
        except KeyError:
            raise InvalidAssignment(f"agent {agent_id!r} is not placed") from None

    def occupant(self, node):
        return self.occupants.get(node)

    def moved(self, agent_id, node):
        placement = dict(self.placement)
        placement[agent_id] = node
        return Assignment.of(placement)


def check_assignment(game, assignment):
    placement = assignment.placement
    expected = set(game.agent_by_id)
    if set(placement) != expected:
        missing = sorted(expected - set(placement))
        extra = sorted(set(placement) - expected)
        raise InvalidAssignment(f"placement does not cover the agents (missing {missing}, unknown {extra})")
    if len(set(placement.values())) != len(placement):
        raise InvalidAssignment("two agents share a node")
    for agent_id, node in placement.items():
        if not 0 <= node < game.topology.node_count:
            raise InvalidAssignment(f"agent {agent_id} placed on unknown node {node}")
    for agent_id, node in game.stubborn_placement.items():
        if placement[agent_id] != node:
            raise InvalidAssignment(f"stubborn agent {agent_id} must stay on node {node}")
    return assignment


def class_key(game, assignment):
    """Node-indexed occupant classes; equal keys mean behaviourally equal assignments."""
    classes = [EMPTY] * game.topology.node_count
    for a in game.agents:
        classes[assignment.placement[a.id]] = a.type if a.kind == STRATEGIC else -a.type
    return tuple(classes)


def assignment_from_classes(game, classes):
    if len(classes) != game.topology.node_count:
        raise InvalidAssignment("class map length differs from the node count")
    placement = {}
    for a in game.stubborn_agents:
        if classes[a.node] != -a.type:
            raise InvalidAssignment(f"class map disagrees with stubborn agent {a.id} on node {a.node}")
        placement[a.id] = a.node
    for t in range(1, game.num_types + 1):
        nodes = [v for v, c in enumerate(classes) if c == t]
        agents = [a.id for a in game.strategic_agents if a.type == t]
        if len(nodes) != len(agents):
            raise InvalidAssignment(f"class map holds {len(nodes)} strategic nodes of type {t}, "
                                    f"the game has {len(agents)} agents")
        placement.update(zip(agents, nodes))
    return Assignment.of(placement)


def random_assignment(game, seed=None):
    rng = random.Random(seed)
    nodes = rng.sample(list(game.free_nodes), len(game.strategic_agents))
    placement = dict(game.stubborn_placement)
    placement.update((a.id, v) for a, v in zip(game.strategic_agents, nodes))
    return Assignment.of(placement)


def with_stubborn(game, assignment, agent_ids):
    """Copy of the game in which the listed strategic agents are frozen where they stand."""
    frozen = set(agent_ids)
    agents = []
    for a in game.agents:
        if a.id in frozen and a.kind == STRATEGIC:
            a = Agent(a.id, a.type, STUBBORN, assignment.node_of(a.id))
        agents.append(a)
    return GameInstance(game.topology, game.num_types, tuple(agents))


# ---------------------------------------------------------
# Utilities
# ---------------------------------------------------------

def utility_at(topology, classes, node, type_id, vacated=None, mode=DIVERSITY):
    """Utility of a type_id agent at ``node``, ignoring whoever sits on ``vacated``."""
    same = total = 0
    for nb in topology.adjacency[node]:
        if nb == vacated:
            continue
        occupant = classes[nb]
        if occupant == EMPTY:
            continue
        total += 1
        if abs(occupant) == type_id:
            same += 1
    if total == 0:
        return ZERO
    if mode == SIMILARITY:
        return Fraction(same, total)
    return Fraction(total - same, total)


def welfare_of_classes(topology, classes, mode=DIVERSITY):
    total = ZERO
    for node, occupant in enumerate(classes):
        if occupant > 0:
            total += utility_at(topology, classes, node, occupant, mode=mode)
    return total


def neighbor_type_counts(game, assignment, node):
    game.topology.check_node(node)
    check_assignment(game, assignment)
    counts = {}
    for nb in game.topology.adjacency[node]:
        agent_id = assignment.occupant(nb)
        if agent_id is None:
            continue
        t = game.agent_by_id[agent_id].type
        counts[t] = counts.get(t, 0) + 1
    return dict(sorted(counts.items()))


def _agent_utility(game, assignment, agent_id, mode):
    check_assignment(game, assignment)
    agent = game.agent(agent_id)
    node = assignment.node_of(agent_id)
    return utility_at(game.topology, class_key(game, assignment), node, agent.type, mode=mode)


def utility(game, assignment, agent_id):
    """Fraction of the agent's occupied neighbours with a different type (0 when it has none)."""
    return _agent_utility(game, assignment, agent_id, DIVERSITY)


def similarity_utility(game, assignment, agent_id):
    return _agent_utility(game, assignment, agent_id, SIMILARITY)


def social_welfare(game, assignment, mode=DIVERSITY):
    """Sum of the strategic agents' utilities; stubborn agents do not count."""
    check_assignment(game, assignment)
    return welfare_of_classes(game.topology, class_key(game, assignment), check_mode(mode))


# ---------------------------------------------------------
# Game and assignment files
# ---------------------------------------------------------

def game_to_dict(game):
    agents = []
    for a in game.agents:
        record = {"id": a.id, "type": a.type, "kind": a.kind}
        if a.kind == STUBBORN:
            record["node"] = a.node
        agents.append(record)
    return {
        "nodes": game.topology.node_count,
        "edges": [list(e) for e in game.topology.sorted_edges],
        "k": game.num_types,
        "agents": agents,
    }


def game_from_dict(data):
    try:
        topology = Topology.from_edges(data["nodes"], data["edges"])
        agents = []
        for record in data["agents"]:
            kind = record.get("kind", STRATEGIC)
            if kind == STUBBORN and "node" not in record:
                raise InvalidInstance(f"stubborn agent {record['id']} has no node")
            if kind == STRATEGIC and "node" in record:
                raise InvalidInstance(f"strategic agent {record['id']} must not carry a node")
            agents.append(Agent(int(record["id"]), int(record["type"]), kind,
                                int(record["node"]) if kind == STUBBORN else None))
        return GameInstance(topology, int(data["k"]), tuple(agents))
    except JumpGameError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InvalidInstance(f"malformed game document: {e!r}") from e


def assignment_to_dict(assignment):
    return {"placement": {str(a): v for a, v in assignment.pairs}}


def assignment_from_dict(data, game=None):
    try:
        assignment = Assignment.of({int(a): int(v) for a, v in data["placement"].items()})
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InvalidAssignment(f"malformed assignment document: {e!r}") from e
    if game is not None:
        check_assignment(game, assignment)
    return assignment


def _read_json(path, error):
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise error(f"cannot read {path}: {e}") from e


def _write_json(data, path):
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def load_game(path):
    game = game_from_dict(_read_json(path, InvalidInstance))
    logger.debug("loaded game from %s: %d nodes, %d agents", path, game.topology.node_count, game.n)
    return game


def save_game(game, path):
    _write_json(game_to_dict(game), path)


def load_assignment(path, game=None):
    return assignment_from_dict(_read_json(path, InvalidAssignment), game)


def save_assignment(assignment, path):
    _write_json(assignment_to_dict(assignment), path)
