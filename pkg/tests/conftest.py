import dataclasses

import numpy as np
import pytest

from transit_prune.ingest import SyntheticSpec, generate_synthetic, sort_edges
from transit_prune.native import parse_text


def sorted_timetable(text: str):
    """Parse the fixture text and presort the transfer graph."""
    tt = parse_text(text)
    graph, _ = sort_edges(tt.transfer_graph)
    return dataclasses.replace(tt, transfer_graph=graph)


def make_network(seed: int, stops: int, routes: int, trips: int,
                 density: float):
    tt = generate_synthetic(SyntheticSpec(stops, routes, trips, density, seed))
    graph, _ = sort_edges(tt.transfer_graph)
    return dataclasses.replace(tt, transfer_graph=graph)


def random_queries(tt, rng: np.random.Generator, count: int):
    n = tt.n_stops
    horizon = tt.last_departure() + 1
    return [(int(rng.integers(0, n)), int(rng.integers(0, n)),
             int(rng.integers(0, horizon))) for _ in range(count)]


ONE_LEG = """
stops 2
route 0 1
trip 100 100 200 200
"""

# one trip chain plus a walk in the middle: ride 0->1, walk 1->2, ride 2->3
RELAY = """
stops 4
route 0 1
trip 100 100 200 200
route 2 3
trip 400 400 500 500
edge 1 2 60
"""

# two ways from 0 to 3: earlier arrival with a long walk (via 1) vs later
# arrival with a short walk (via 2); neither dominates the other
TRADEOFF = """
stops 4
route 0 1
trip 0 0 200 200
route 0 2
trip 0 0 350 350
edge 1 3 100
edge 2 3 10
"""


@pytest.fixture
def one_leg():
    return sorted_timetable(ONE_LEG)


@pytest.fixture
def relay():
    return sorted_timetable(RELAY)


@pytest.fixture
def tradeoff():
    return sorted_timetable(TRADEOFF)
