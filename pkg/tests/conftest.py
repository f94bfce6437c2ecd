import pytest

from granusim.topology import NetworkId
from oracles import make_topology


@pytest.fixture
def line3():
    """Three-node directed line 0 -> 1 -> 2."""
    return make_topology([(0, 1), (1, 2)], 3)


@pytest.fixture
def water22(request):
    from granusim.topology import generate_topology
    return generate_topology(NetworkId.WATER, 22, 77, seed=20200831)
