"""Improving-response dynamics, the edge potential and spider move audits."""
import json
import logging
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from core import (
    DIVERSITY,
    EMPTY,
    ZERO,
    Assignment,
    check_assignment,
    check_mode,
    class_key,
    format_rational,
    social_welfare,
    utility_at,
)
from errors import DisconnectedTopology, InvalidAssignment, InvalidMove, NotASpider, UnclassifiedMove

logger = logging.getLogger(__name__)

DEFAULT_M = Fraction(1, 4)
HALF = Fraction(1, 2)
ONE = Fraction(1)

FIRST = "first"
BEST = "best"
RANDOM = "random"
POLICIES = (FIRST, BEST, RANDOM)
POLICY_ALIASES = {"best_response": BEST}


@dataclass(frozen=True)
class Move:
    agent: int
    source: int
    target: int
    utility_before: Fraction
    utility_after: Fraction

    def reversed(self):
        return Move(self.agent, self.target, self.source, self.utility_after, self.utility_before)


class RunStatus(str, Enum):
    CONVERGED = "Converged"
    CYCLE_DETECTED = "CycleDetected"
    STEP_LIMIT = "StepLimit"


@dataclass
class RunOutcome:
    status: RunStatus
    start: Assignment
    final_assignment: Assignment
    trace: list
    cycle: list
    steps: int
    mode: str = DIVERSITY


@dataclass(frozen=True)
class PotentialConfig:
    """Weight m given to edges touching an empty node; 0 < m < 1."""
    m: Fraction = DEFAULT_M

    def __post_init__(self):
        m = Fraction(self.m)
        if not 0 < m < 1:
            raise ValueError(f"potential parameter m must lie strictly between 0 and 1, got {m}")
        object.__setattr__(self, "m", m)

    def require_spider_range(self):
        if self.m >= HALF:
            raise ValueError(f"spider audits need m < 1/2, got {self.m}")


# ---------------------------------------------------------
# Moves
# ---------------------------------------------------------

def improving_jumps(topology, classes, sources, mode=DIVERSITY):
    """Yield (source, target, before, after) for every improving jump out of ``sources``.

    The target utility is taken with the source vacated, which matters when the
    two nodes are adjacent. Targets come out in ascending node order.
    """
    empties = [v for v, c in enumerate(classes) if c == EMPTY]
    for source in sources:
        type_id = classes[source]
        before = utility_at(topology, classes, source, type_id, mode=mode)
        if before == ONE:
            continue
        for target in empties:
            after = utility_at(topology, classes, target, type_id, vacated=source, mode=mode)
            if after > before:
                yield source, target, before, after


def improving_moves(game, assignment, agent=None, mode=DIVERSITY):
    check_assignment(game, assignment)
    check_mode(mode)
    if agent is not None:
        chosen = game.agent(agent)
        if not chosen.strategic:
            raise InvalidMove(f"agent {agent} is stubborn and never moves")
        movers = [chosen]
    else:
        movers = game.strategic_agents
    classes = class_key(game, assignment)
    moves = []
    for a in movers:
        source = assignment.node_of(a.id)
        for _, target, before, after in improving_jumps(game.topology, classes, [source], mode):
            moves.append(Move(a.id, source, target, before, after))
    return moves


def apply_move(assignment, move):
    if assignment.node_of(move.agent) != move.source:
        raise InvalidMove(f"agent {move.agent} is not on node {move.source}")
    if assignment.occupant(move.target) is not None:
        raise InvalidMove(f"node {move.target} is occupied")
    return assignment.moved(move.agent, move.target)


# ---------------------------------------------------------
# Improving-response dynamics
# ---------------------------------------------------------

def _selector(policy, seed):
    policy = POLICY_ALIASES.get(policy, policy)
    if policy == FIRST:
        return lambda moves: moves[0]
    if policy == BEST:
        # max keeps the first maximal move, i.e. the lexicographic tie-break
        return lambda moves: max(moves, key=lambda m: m.utility_after)
    if policy == RANDOM:
        rng = random.Random(seed)
        return rng.choice
    raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")


def run_ird(game, start, policy=FIRST, max_steps=10000, detect_cycles=True, seed=None, mode=DIVERSITY):
    if max_steps <= 0:
        raise ValueError(f"max_steps must be positive, got {max_steps}")
    check_assignment(game, start)
    select = _selector(policy, seed)

    current = start
    trace = []
    cycle = None
    seen = {class_key(game, start): 0}
    while True:
        moves = improving_moves(game, current, mode=mode)
        if not moves:
            status = RunStatus.CONVERGED
            break
        if len(trace) >= max_steps:
            status = RunStatus.STEP_LIMIT
            break
        move = select(moves)
        logger.debug("step %d: agent %d %d -> %d (%s -> %s)", len(trace) + 1, move.agent, move.source,
                     move.target, move.utility_before, move.utility_after)
        current = apply_move(current, move)
        trace.append(move)
        if detect_cycles:
            key = class_key(game, current)
            if key in seen:
                cycle = trace[seen[key]:]
                status = RunStatus.CYCLE_DETECTED
                break
            seen[key] = len(trace)

    logger.info("IRD (%s) stopped after %d steps: %s", policy, len(trace), status.value)
    return RunOutcome(status, start, current, trace, cycle, len(trace), mode)


# ---------------------------------------------------------
# Potential
# ---------------------------------------------------------

def potential_of_classes(topology, classes, m):
    total = ZERO
    for u, v in topology.sorted_edges:
        cu, cv = classes[u], classes[v]
        if cu == EMPTY or cv == EMPTY:
            total += m
        elif abs(cu) == abs(cv):
            total += 1
    return total


def potential(game, assignment, config=None):
    """Edge potential: 1 per same-type edge, m per edge touching an empty node, 0 otherwise.

    Edges with two empty endpoints also weigh m.
    """
    config = config or PotentialConfig()
    check_assignment(game, assignment)
    return potential_of_classes(game.topology, class_key(game, assignment), config.m)


def potential_delta(game, assignment, move, config=None):
    return potential(game, apply_move(assignment, move), config) - potential(game, assignment, config)


# ---------------------------------------------------------
# Spider graphs
# ---------------------------------------------------------

LEAF = "leaf"
PATH = "degree-2"
CENTER = "center"


def is_spider(topology):
    """Return (True, center) for a tree with exactly one node of degree >= 3, else (False, None)."""
    if not topology.is_connected():
        raise DisconnectedTopology("spider test needs a connected topology")
    if not topology.is_tree():
        return False, None
    hubs = [v for v in range(topology.node_count) if len(topology.adjacency[v]) >= 3]
    if len(hubs) != 1:
        return False, None
    return True, hubs[0]


def _spider_kind(topology, center, node):
    if node == center:
        return CENTER
    return LEAF if len(topology.adjacency[node]) == 1 else PATH


def _same_type_neighbors(topology, classes, node, type_id):
    return sum(1 for nb in topology.adjacency[node] if classes[nb] != EMPTY and abs(classes[nb]) == type_id)


# (source kind, target kind, source utility, target utility) -> bound as a function of m
_NON_CENTER_BOUNDS = {
    (PATH, PATH, ZERO, HALF): lambda m: -ONE,
    (PATH, PATH, ZERO, ONE): lambda m: -ONE,
    (PATH, PATH, HALF, ONE): lambda m: -ONE,
    (PATH, LEAF, ZERO, ONE): lambda m: m - 2,
    (PATH, LEAF, HALF, ONE): lambda m: m - 1,
    (LEAF, PATH, ZERO, HALF): lambda m: -m,
    (LEAF, PATH, ZERO, ONE): lambda m: -m,
    (LEAF, LEAF, ZERO, ONE): lambda m: -ONE,
}


def spider_move_delta_bound(game, assignment_before, move, config=None):
    """Upper bound on the potential change of one improving move on a spider with one empty node."""
    config = config or PotentialConfig()
    config.require_spider_range()
    topology = game.topology
    spider, center = is_spider(topology)
    if not spider:
        raise NotASpider("topology is not a spider")
    check_assignment(game, assignment_before)
    classes = class_key(game, assignment_before)
    if classes.count(EMPTY) != 1:
        raise InvalidAssignment("spider audits need exactly one empty node")
    if assignment_before.node_of(move.agent) != move.source or classes[move.target] != EMPTY:
        raise InvalidMove(f"move {move} does not fit the assignment")

    type_id = game.agent(move.agent).type
    u0 = utility_at(topology, classes, move.source, type_id)
    u1 = utility_at(topology, classes, move.target, type_id, vacated=move.source)
    if u1 <= u0:
        raise InvalidMove(f"move {move} is not improving")

    m = config.m
    m_delta = m * len(topology.adjacency[center])
    adjacent = move.target in topology.adjacency[move.source]
    source_kind = _spider_kind(topology, center, move.source)
    target_kind = _spider_kind(topology, center, move.target)

    if target_kind == CENTER:
        after = list(classes)
        after[move.source] = EMPTY
        after[center] = type_id
        n_after = _same_type_neighbors(topology, after, center, type_id)
        if u0 == ZERO and source_kind == PATH:
            base = 2 * m - 1 if adjacent else 2 * m - 2
        elif u0 == ZERO and source_kind == LEAF:
            base = m if adjacent else m - 1
        elif u0 == HALF and u1 > HALF and source_kind == PATH and not adjacent:
            base = 2 * m - 1
        else:
            raise UnclassifiedMove(f"no table row for {source_kind} -> center with utilities {u0} -> {u1}")
        return base + n_after - m_delta

    if source_kind == CENTER:
        n_before = _same_type_neighbors(topology, classes, center, type_id)
        if target_kind == PATH and u0 < HALF and u1 == HALF:
            return 1 - 2 * m + m_delta - n_before
        if target_kind == PATH and u1 == ONE:
            return -2 * m + m_delta - n_before
        if target_kind == LEAF and u1 == ONE:
            return -m + m_delta - n_before
        raise UnclassifiedMove(f"no table row for center -> {target_kind} with utilities {u0} -> {u1}")

    try:
        return _NON_CENTER_BOUNDS[(source_kind, target_kind, u0, u1)](m)
    except KeyError:
        raise UnclassifiedMove(
            f"no table row for {source_kind} -> {target_kind} with utilities {u0} -> {u1}") from None


# ---------------------------------------------------------
# Traces
# ---------------------------------------------------------

def trace_records(game, outcome, config=None):
    config = config or PotentialConfig()
    current = outcome.start
    phi = potential(game, current, config)
    for step, move in enumerate(outcome.trace, 1):
        following = apply_move(current, move)
        phi_after = potential(game, following, config)
        yield {
            "step": step,
            "agent": move.agent,
            "type": game.agent(move.agent).type,
            "from": move.source,
            "to": move.target,
            "u_before": format_rational(move.utility_before),
            "u_after": format_rational(move.utility_after),
            "phi_before": format_rational(phi),
            "phi_after": format_rational(phi_after),
        }
        current, phi = following, phi_after
    yield {
        "status": outcome.status.value,
        "steps": outcome.steps,
        "social_welfare": format_rational(social_welfare(game, outcome.final_assignment, outcome.mode)),
    }


def write_trace(stream, game, outcome, config=None):
    """Write the run as JSON lines: one record per move, then the terminal record."""
    for record in trace_records(game, outcome, config):
        stream.write(json.dumps(record) + "\n")
