from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transit_prune.exceptions import InvalidGraphError, NotAPathError
from transit_prune.model import (INFINITY, StopEvent, Timetable, TransferGraph,
                                 density, format_hms, parse_hms, path_duration,
                                 replay_journey, saturating_add, validate)
from transit_prune.native import parse_text

from conftest import ONE_LEG


def complete_graph(n: int) -> TransferGraph:
    edges = [(u, v, 60) for u in range(n) for v in range(n) if u != v]
    return TransferGraph.from_edges(n, edges)


def test_time_arithmetic_saturates():
    assert saturating_add(100, 50) == 150
    assert saturating_add(INFINITY, 50) == INFINITY
    assert INFINITY > (1 << 31)


def test_hms_round_trip():
    assert parse_hms("13:55:00") == 50100
    assert parse_hms("25:01:30") == 25 * 3600 + 90  # past-midnight trips
    assert format_hms(50100) == "13:55:00"
    assert format_hms(INFINITY) == "unreachable"
    with pytest.raises(ValueError):
        parse_hms("12:61:00")


def test_density_complete_graph_is_one():
    assert density(complete_graph(5)) == 1.0


def test_density_small_counts():
    g = TransferGraph.from_edges(4, [(0, 1, 10), (1, 2, 10), (2, 3, 10)])
    assert density(g) == 0.25


def test_density_empty_graph_is_zero():
    g = TransferGraph.from_edges(6, [])
    assert density(g) == 0.0


def test_density_large_counts_match_exact_fraction():
    # counts of a country-scale transfer graph; value checked against exact
    # rational arithmetic rather than any published rounding
    vertices, edges = 25_125, 3_212_206
    expected = Fraction(edges, vertices * (vertices - 1))
    indptr = np.zeros(vertices + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(
        np.arange(edges) % vertices, minlength=vertices))
    g = TransferGraph(vertices, indptr,
                      ((np.arange(edges) + 1) % vertices).astype(np.int64),
                      np.ones(edges, dtype=np.int64))
    assert density(g) == pytest.approx(float(expected), rel=1e-12)
    assert f"{float(expected):.2e}" == "5.09e-03"


def test_density_needs_two_vertices():
    g = TransferGraph.from_edges(1, [])
    with pytest.raises(InvalidGraphError):
        density(g)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30))
def test_density_bounds(n):
    assert density(complete_graph(n)) == 1.0
    assert density(TransferGraph.from_edges(n, [])) == 0.0


def test_path_duration_trivial_paths():
    g = TransferGraph.from_edges(3, [(0, 1, 120), (1, 2, 300)])
    assert path_duration(g, []) == 0
    assert path_duration(g, [1]) == 0
    assert path_duration(g, [0, 1, 2]) == 420


def test_path_duration_missing_edge_names_pair():
    g = TransferGraph.from_edges(3, [(0, 1, 120)])
    with pytest.raises(NotAPathError) as exc:
        path_duration(g, [0, 1, 0])
    assert exc.value.pair == (1, 0)


def test_path_duration_matches_independent_resummation():
    rng = np.random.default_rng(5)
    edges = [(u, v, int(rng.integers(1, 500)))
             for u in range(6) for v in range(6) if u != v]
    g = TransferGraph.from_edges(6, edges)
    weights = {(u, v): d for u, v, d in edges}
    path = [0, 3, 5, 2]
    expected = sum(weights[(a, b)] for a, b in zip(path, path[1:]))
    assert path_duration(g, path) == expected


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=8))
def test_path_duration_additive(path):
    g = complete_graph(6)
    cut = len(path) // 2
    left, right = path[:cut + 1], path[cut:]
    if len(left) >= 1 and len(right) >= 1 and left[-1] == right[0]:
        assert (path_duration(g, path)
                == path_duration(g, left) + path_duration(g, right))


def test_graph_rejects_self_loops():
    with pytest.raises(InvalidGraphError):
        TransferGraph.from_edges(3, [(0, 0, 60)])


def test_graph_rejects_nonpositive_durations():
    with pytest.raises(InvalidGraphError):
        TransferGraph.from_edges(3, [(0, 1, 0)])
    with pytest.raises(InvalidGraphError):
        TransferGraph.from_edges(3, [(0, 1, -5)])


def test_parallel_edges_collapse_to_minimum():
    g = TransferGraph.from_edges(3, [(0, 1, 300), (0, 1, 120), (0, 1, 200)])
    assert g.edge_count == 1
    assert g.edge_duration(0, 1) == 120


def test_validate_well_formed_toy():
    tt = parse_text(ONE_LEG)
    assert validate(tt) == []


def test_validate_flags_negative_dwell():
    tt = parse_text("""
stops 3
route 0 1 2
trip 100 100 250 200 300 300
""")
    codes = [v.code for v in validate(tt)]
    assert codes == ["negative-dwell"]


def test_validate_flags_overtaking_trips():
    tt = parse_text("""
stops 2
route 0 1
trip 100 100 500 500
trip 200 200 400 400
""")
    codes = [v.code for v in validate(tt)]
    assert "trip-overtaking" in codes


def test_validate_flags_dishonest_sorted_flag():
    tt = parse_text("""
stops 3
route 0 1
trip 0 0 10 10
edge 0 1 300
edge 0 2 100
""")
    g = tt.transfer_graph
    bad = TransferGraph(g.vertex_count, g.indptr, g.targets, g.durations,
                        sorted_by_duration=True)
    import dataclasses
    tt = dataclasses.replace(tt, transfer_graph=bad)
    assert any(v.code == "unsorted-adjacency" for v in validate(tt))


def test_validate_flags_short_route():
    tt = parse_text(ONE_LEG)
    bad = Timetable.from_parts(tt.stop_names,
                               [([0], [[StopEvent(0, 0)]])],
                               tt.transfer_graph)
    assert any(v.code == "short-route" for v in validate(bad))


def test_journey_replay(one_leg):
    from transit_prune.raptor import Pruning, Query, query
    res = query(one_leg, Query(0, 1, 50, 4, Pruning.OFF))
    j = res.entries[0].journey
    assert replay_journey(one_leg, j) == j.arrival == 200
    assert j.num_trips == 1
