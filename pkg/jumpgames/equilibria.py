"""Equilibrium checks, the exhaustive oracle, tree equilibria, cycle search and the hardness gadget."""
import heapq
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

import networkx as nx

from core import (
    BLUE,
    DIVERSITY,
    EMPTY,
    RED,
    STRATEGIC,
    STUBBORN,
    ZERO,
    Agent,
    Assignment,
    GameInstance,
    Topology,
    assignment_from_classes,
    assignment_to_dict,
    check_assignment,
    check_mode,
    class_key,
    format_rational,
    utility_at,
    welfare_of_classes,
)
from dynamics import Move, apply_move, improving_jumps
from errors import (
    BudgetExceeded,
    InfeasibleParameters,
    InternalVerificationFailed,
    InvalidAssignment,
    InvalidTopology,
    NotATree,
    StubbornPresent,
    TooManyAgents,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeviationWitness:
    agent: int
    target: int
    utility_current: Fraction
    utility_at_target: Fraction


@dataclass
class OracleReport:
    total_states_examined: int
    equilibrium_count: int
    opt_welfare: Fraction
    min_eq_welfare: Fraction = None
    max_eq_welfare: Fraction = None
    poa: Fraction = None
    pos: Fraction = None
    poa_infinite: bool = False
    pos_infinite: bool = False
    example_equilibrium: Assignment = None
    best_equilibrium: Assignment = None
    example_optimum: Assignment = None
    equilibrium_states: list = None


@dataclass
class IrcSearchResult:
    cycle: list
    exhausted: bool
    states_explored: int
    start: Assignment = None


# ---------------------------------------------------------
# Equilibrium check
# ---------------------------------------------------------

def is_equilibrium(game, assignment, mode=DIVERSITY):
    """Return (True, None), or (False, witness) with the lexicographically first deviation."""
    check_assignment(game, assignment)
    check_mode(mode)
    classes = class_key(game, assignment)
    for a in game.strategic_agents:
        source = assignment.node_of(a.id)
        for _, target, before, after in improving_jumps(game.topology, classes, [source], mode):
            return False, DeviationWitness(a.id, target, before, after)
    return True, None


# ---------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------

def count_class_states(game):
    remaining = len(game.free_nodes)
    total = 1
    for count in game.strategic_counts.values():
        total *= comb(remaining, count)
        remaining -= count
    return total


def iter_class_states(game):
    """Every occupant-class map of the game, stubborn nodes fixed, in a deterministic order."""
    base = [EMPTY] * game.topology.node_count
    for a in game.stubborn_agents:
        base[a.node] = -a.type
    quotas = [(t, c) for t, c in game.strategic_counts.items() if c > 0]

    def place(i, available):
        if i == len(quotas):
            yield tuple(base)
            return
        type_id, count = quotas[i]
        for chosen in combinations(available, count):
            for v in chosen:
                base[v] = type_id
            taken = set(chosen)
            yield from place(i + 1, [v for v in available if v not in taken])
            for v in chosen:
                base[v] = EMPTY

    yield from place(0, list(game.free_nodes))


def _ratio(opt, welfare):
    """opt / welfare, with (None, True) for a zero denominator and 1 when both vanish."""
    if welfare == 0:
        return (Fraction(1), False) if opt == 0 else (None, True)
    return opt / welfare, False


def brute_force(game, budget, collect_equilibria=False, mode=DIVERSITY):
    check_mode(mode)
    state_count = count_class_states(game)
    if state_count > budget:
        raise BudgetExceeded(state_count, budget)

    topology = game.topology
    examined = eq_count = 0
    opt = opt_state = None
    worst = worst_state = best = best_state = None
    eq_states = [] if collect_equilibria else None
    for classes in iter_class_states(game):
        examined += 1
        welfare = welfare_of_classes(topology, classes, mode)
        if opt is None or welfare > opt:
            opt, opt_state = welfare, classes
        sources = [v for v, c in enumerate(classes) if c > 0]
        if next(improving_jumps(topology, classes, sources, mode), None) is not None:
            continue
        eq_count += 1
        if collect_equilibria:
            eq_states.append(classes)
        if worst is None or welfare < worst:
            worst, worst_state = welfare, classes
        if best is None or welfare > best:
            best, best_state = welfare, classes

    report = OracleReport(examined, eq_count, opt, example_optimum=assignment_from_classes(game, opt_state),
                          equilibrium_states=eq_states)
    if eq_count:
        report.min_eq_welfare = worst
        report.max_eq_welfare = best
        report.example_equilibrium = assignment_from_classes(game, worst_state)
        report.best_equilibrium = assignment_from_classes(game, best_state)
        report.poa, report.poa_infinite = _ratio(opt, worst)
        report.pos, report.pos_infinite = _ratio(opt, best)
    logger.info("brute force: %d states, %d equilibria, OPT %s", examined, eq_count, opt)
    return report


def report_to_dict(report):
    def rational(value):
        return None if value is None else format_rational(value)

    def ratio(value, infinite):
        return "infinite" if infinite else rational(value)

    data = {
        "total_states_examined": report.total_states_examined,
        "equilibrium_count": report.equilibrium_count,
        "opt_welfare": rational(report.opt_welfare),
        "min_eq_welfare": rational(report.min_eq_welfare),
        "max_eq_welfare": rational(report.max_eq_welfare),
        "poa": ratio(report.poa, report.poa_infinite),
        "pos": ratio(report.pos, report.pos_infinite),
        "example_optimum": assignment_to_dict(report.example_optimum),
        "example_equilibrium": (assignment_to_dict(report.example_equilibrium)
                                if report.example_equilibrium else None),
        "best_equilibrium": assignment_to_dict(report.best_equilibrium) if report.best_equilibrium else None,
    }
    if report.equilibrium_states is not None:
        data["equilibrium_states"] = [list(s) for s in report.equilibrium_states]
    return data


# ---------------------------------------------------------
# Improving-response cycles
# ---------------------------------------------------------

def _successors(topology, classes, mode):
    sources = [v for v, c in enumerate(classes) if c > 0]
    for jump in improving_jumps(topology, classes, sources, mode):
        source, target = jump[0], jump[1]
        following = list(classes)
        following[target] = following[source]
        following[source] = EMPTY
        yield tuple(following), jump


def replay_cycle(game, start, cycle, mode=DIVERSITY):
    """True when every move improves and the moves lead back to ``start``'s class state."""
    current = start
    classes = class_key(game, start)
    for move in cycle:
        type_id = game.agent(move.agent).type
        before = utility_at(game.topology, classes, move.source, type_id, mode=mode)
        after = utility_at(game.topology, classes, move.target, type_id, vacated=move.source, mode=mode)
        if not after > before:
            return False
        current = apply_move(current, move)
        classes = class_key(game, current)
    return classes == class_key(game, start)


def _cycle_moves(game, first_state, jumps, mode):
    start = assignment_from_classes(game, first_state)
    current = start
    moves = []
    for source, target, before, after in jumps:
        move = Move(current.occupant(source), source, target, before, after)
        moves.append(move)
        current = apply_move(current, move)
    if not replay_cycle(game, start, moves, mode):
        raise InternalVerificationFailed("cycle found by search does not replay")
    return start, moves


def find_irc(game, state_budget, mode=DIVERSITY, start=None):
    """Depth-first search for a cycle in the improving-move graph over class states.

    Without ``start`` every class state is a root, so ``exhausted`` on a
    cycle-free result means the whole space is acyclic. Raises BudgetExceeded
    when more than ``state_budget`` distinct states would be needed.
    """
    if state_budget <= 0:
        raise ValueError(f"state budget must be positive, got {state_budget}")
    check_mode(mode)
    topology = game.topology
    roots = [class_key(game, check_assignment(game, start))] if start is not None else iter_class_states(game)

    on_stack, done = 1, 2
    status = {}

    def discover(state):
        if len(status) >= state_budget:
            raise BudgetExceeded(len(status) + 1, state_budget)
        status[state] = on_stack

    for root in roots:
        if root in status:
            continue
        discover(root)
        path = [root]
        jumps = []
        stack = [_successors(topology, root, mode)]
        while stack:
            step = next(stack[-1], None)
            if step is None:
                stack.pop()
                status[path.pop()] = done
                if jumps:
                    jumps.pop()
                continue
            following, jump = step
            mark = status.get(following)
            if mark == done:
                continue
            if mark == on_stack:
                i = path.index(following)
                cycle_start, moves = _cycle_moves(game, path[i], jumps[i:] + [jump], mode)
                logger.info("improving-response cycle of length %d after %d states", len(moves), len(status))
                return IrcSearchResult(moves, False, len(status), cycle_start)
            discover(following)
            path.append(following)
            jumps.append(jump)
            stack.append(_successors(topology, following, mode))

    logger.info("no improving-response cycle among %d states", len(status))
    return IrcSearchResult(None, True, len(status))


# ---------------------------------------------------------
# Tree equilibria
# ---------------------------------------------------------

def _extract_subtree(topology, root, size):
    """Delete non-root leaves, deepest first and then largest id, until ``size`` nodes remain."""
    depth = {v: d for d, layer in enumerate(nx.bfs_layers(topology.graph, root)) for v in layer}
    kept = set(range(topology.node_count))
    degree = {v: len(topology.adjacency[v]) for v in kept}
    heap = [(-depth[v], -v) for v in kept if v != root and degree[v] == 1]
    heapq.heapify(heap)
    while len(kept) > size:
        _, neg = heapq.heappop(heap)
        leaf = -neg
        kept.remove(leaf)
        for nb in topology.adjacency[leaf]:
            if nb in kept:
                degree[nb] -= 1
                if nb != root and degree[nb] == 1:
                    heapq.heappush(heap, (-depth[nb], -nb))
    return kept


def _rooted_layout(topology, root, kept):
    """Children, level and BFS order of the kept subtree; children ascend by id."""
    level = {root: 0}
    children = {v: [] for v in kept}
    order = [root]
    for parent, child in nx.bfs_edges(topology.graph.subgraph(kept), root, sort_neighbors=sorted):
        children[parent].append(child)
        level[child] = level[parent] + 1
        order.append(child)
    return children, level, order


def _two_phase_slots(order, level):
    """Odd levels deepest first, then even levels from level 2 down; BFS order inside a level."""
    by_level = {}
    for node in order[1:]:
        by_level.setdefault(level[node], []).append(node)
    deepest = max(by_level)
    odd = [v for lvl in range(deepest, 0, -1) if lvl % 2 == 1 for v in by_level[lvl]]
    even = [v for lvl in range(2, deepest + 1, 2) for v in by_level[lvl]]
    return odd + even


class _TreeFill:
    """Mutable placement used while the tree equilibrium is assembled."""

    def __init__(self, game, children, order):
        self.game = game
        self.topology = game.topology
        self.children = children
        self.order = order
        self.classes = [EMPTY] * game.topology.node_count
        self.occupant = {}
        self.red = None

    def place(self, node, agent):
        self.occupant[node] = agent.id
        self.classes[node] = agent.type

    def swap(self, u, v):
        self.occupant[u], self.occupant[v] = self.occupant[v], self.occupant[u]
        self.classes[u], self.classes[v] = self.classes[v], self.classes[u]

    def move(self, source, target):
        self.occupant[target] = self.occupant.pop(source)
        self.classes[target] = self.classes[source]
        self.classes[source] = EMPTY

    def is_red(self, node):
        return self.classes[node] == self.red

    def utility(self, node):
        return utility_at(self.topology, self.classes, node, self.classes[node])

    def is_mixed(self, node):
        if not self.is_red(node):
            return False
        kids = self.children.get(node, [])
        return any(self.is_red(c) for c in kids) and any(not self.is_red(c) for c in kids)

    def available(self, node):
        if self.classes[node] != EMPTY:
            return False
        occupied = [nb for nb in self.topology.adjacency[node] if self.classes[nb] != EMPTY]
        return bool(occupied) and not any(self.is_red(nb) for nb in occupied)

    def assignment(self):
        return Assignment.of({agent: node for node, agent in self.occupant.items()})


def _preprocess_mixed(fill):
    handled = set()
    while True:
        mixed = [v for v in fill.order if v not in handled and fill.is_mixed(v)]
        if not mixed:
            return
        a = mixed[0]
        handled.add(a)
        kids = fill.children[a]
        b = next((c for c in kids if c in mixed), None)
        s1 = [c for c in kids if fill.is_red(c) and fill.children[c]]
        s2 = [c for c in kids if not fill.is_red(c) and not fill.children[c]]
        if s2:
            if b is not None:
                s1.remove(b)
                s1.insert(0, b)
            for u, v in zip(s1, s2):
                logger.debug("swap %d <-> %d below mixed node %d", u, v, a)
                fill.swap(u, v)
        elif b is not None:
            v = min(c for c in kids if not fill.is_red(c))
            logger.debug("swap %d <-> %d below mixed node %d", b, v, a)
            fill.swap(b, v)


def _candidates(fill):
    agents = [fill.occupant[v] for v in fill.order if fill.is_red(v) and fill.utility(v) == ZERO]
    for a in fill.order:
        if not fill.is_mixed(a):
            continue
        kids = fill.children[a]
        red_kids_unhappy = all(fill.utility(c) == ZERO for c in kids if fill.is_red(c))
        others_have_children = all(fill.children[c] for c in kids if not fill.is_red(c))
        if not red_kids_unhappy and others_have_children:
            agents.append(fill.occupant[a])
    return agents


def construct_tree_equilibrium(game):
    """Build an equilibrium assignment for an all-strategic game on a tree."""
    topology = game.topology
    if not topology.is_connected() or not topology.is_tree():
        raise NotATree("topology is not a tree")
    if game.stubborn_agents:
        raise StubbornPresent("tree construction needs every agent to be strategic")
    if topology.node_count < game.n + 1:
        raise TooManyAgents(f"{game.n} agents do not fit on {topology.node_count} nodes with one to spare")

    root = min(v for v in range(topology.node_count) if len(topology.adjacency[v]) == 1)
    kept = _extract_subtree(topology, root, game.n + 1)
    children, level, order = _rooted_layout(topology, root, kept)
    for v in range(topology.node_count):
        children.setdefault(v, [])

    fill = _TreeFill(game, children, order)
    sizes = game.type_sizes()
    agents = sorted(game.agents, key=lambda a: (-sizes[a.type], a.type, a.id))
    for node, agent in zip(_two_phase_slots(order, level), agents):
        fill.place(node, agent)
    fill.red = fill.classes[children[root][0]]

    _preprocess_mixed(fill)
    for agent_id in _candidates(fill):
        source = next(v for v, a in fill.occupant.items() if a == agent_id)
        if fill.utility(source) == 1:
            continue
        target = next((t for t in range(topology.node_count) if fill.available(t)), None)
        if target is None:
            break
        logger.debug("moving agent %d from %d to available node %d", agent_id, source, target)
        fill.move(source, target)

    assignment = fill.assignment()
    ok, witness = is_equilibrium(game, assignment)
    if not ok:
        raise InternalVerificationFailed(f"constructed assignment admits deviation {witness}")
    logger.info("tree equilibrium on %d nodes (subtree of %d), root %d", topology.node_count, len(kept), root)
    return assignment


# ---------------------------------------------------------
# Hardness gadget
# ---------------------------------------------------------

@dataclass(frozen=True)
class GadgetLayout:
    X: tuple
    W_blue: tuple
    W_red: tuple
    x: int
    y: int
    z: int
    x_blue: tuple
    y_red: tuple
    y_blue: tuple
    z_red: tuple
    z_blue: tuple
    node_count: int

    @property
    def bridge(self):
        return self.W_blue[0], self.x_blue[0]


def gadget_layout(h_vertex_count, s):
    """Node ids of the gadget: H's vertices, then W, then x, y, z and their stubborn neighbours."""
    if s < 1:
        raise InfeasibleParameters(f"s must be at least 1, got {s}")
    h = h_vertex_count
    w_blue = tuple(range(h, h + 5 * s + 1))
    w_red = tuple(range(h + 5 * s + 1, h + 7 * s + 1))
    x, y, z = h + 7 * s + 1, h + 7 * s + 2, h + 7 * s + 3
    ids = iter(range(z + 1, z + 15))

    def take(count):
        return tuple(next(ids) for _ in range(count))

    return GadgetLayout(tuple(range(h)), w_blue, w_red, x, y, z,
                        take(1), take(1), take(5), take(3), take(4), z + 15)


def build_gadget(h_edges, s, h_vertex_count=None):
    h_edges = [tuple(e) for e in h_edges]
    highest = max((max(e) for e in h_edges), default=-1)
    h = highest + 1 if h_vertex_count is None else h_vertex_count
    if h < 1 or h <= highest or any(min(e) < 0 for e in h_edges):
        raise InvalidTopology(f"H edges {h_edges} do not fit {h} vertices")
    try:
        Topology.from_edges(h, h_edges)
    except InvalidTopology as e:
        raise InvalidTopology(f"H is not a simple graph: {e}") from e
    if s > h + 1:
        raise InfeasibleParameters(f"s={s} leaves no empty node on an H with {h} vertices")

    layout = gadget_layout(h, s)
    edges = list(h_edges)
    edges += [(v, w) for v in layout.X for w in layout.W_blue + layout.W_red]
    edges.append((layout.x, layout.y))
    edges += [(layout.x, v) for v in layout.x_blue]
    edges += [(layout.y, v) for v in layout.y_red + layout.y_blue]
    edges += [(layout.z, v) for v in layout.z_red + layout.z_blue]
    edges.append(layout.bridge)

    agents = [Agent(i, RED) for i in range(s + 1)]
    stubborn = [(v, BLUE) for v in layout.W_blue] + [(v, RED) for v in layout.W_red]
    stubborn += [(v, BLUE) for v in layout.x_blue]
    stubborn += [(v, RED) for v in layout.y_red] + [(v, BLUE) for v in layout.y_blue]
    stubborn += [(v, RED) for v in layout.z_red] + [(v, BLUE) for v in layout.z_blue]
    agents += [Agent(s + 1 + i, t, STUBBORN, v) for i, (v, t) in enumerate(stubborn)]
    return GameInstance(Topology.from_edges(layout.node_count, edges), 2, tuple(agents))


def gadget_canonical_assignment(game, layout, independent_set):
    """Strategic reds on the independent set, the last one on x."""
    chosen = sorted(independent_set)
    reds = [a.id for a in game.agents if a.kind == STRATEGIC]
    if len(chosen) != len(reds) - 1:
        raise InvalidAssignment(f"need an independent set of size {len(reds) - 1}, got {chosen}")
    for u, v in combinations(chosen, 2):
        if v in game.topology.adjacency[u]:
            raise InvalidAssignment(f"vertices {u} and {v} are adjacent in H")
    placement = dict(game.stubborn_placement)
    placement.update(zip(reds, chosen + [layout.x]))
    return check_assignment(game, Assignment.of(placement))
