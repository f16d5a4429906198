import pytest

from core import Topology, game_from_types
from instances import gen_line


@pytest.fixture
def path3_game():
    """Two agents of different types on a 3-node path."""
    return game_from_types(gen_line(3), 2, [1, 2])


@pytest.fixture
def triangle_with_tail():
    """Triangle 0-1-2 with a tail 2-3."""
    return Topology.from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
