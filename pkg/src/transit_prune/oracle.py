"""Brute-force verification oracles.

Deliberately slow, structurally independent checkers used by tests and the
``verify`` command: a Dijkstra over an explicit time-expanded event graph
for earliest arrival, and an exhaustive journey enumerator (with exact
dominance memoization only) for the three-criteria Pareto set. Both follow
the same journey grammar as the engines: an optional transfer, then trips
each optionally followed by one transfer; transfers never chain.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from collections import deque

import numpy as np

from .exceptions import OracleScaleError
from .model import INFINITY, Timetable

KIND_ARRIVAL = 0
KIND_DEPARTURE = 1

MAX_EVENT_NODES = 100_000
MAX_ORACLE_STOPS = 50
MAX_ORACLE_TRIPS = 6


@dataclass
class TimeExpandedGraph:
    """Event-node expansion of a timetable.

    Nodes are the arrival/departure halves of every stop event. Edges are
    riding (departure to next arrival of the trip), dwelling (arrival to
    departure of the same event), waiting (chronological chain over a
    stop's departure nodes), boarding connectors (arrival into the chain)
    and transfer connectors (arrival into another stop's chain via a
    transfer edge). Every edge weight is a non-negative duration, so the
    graph is a DAG in time.
    """

    timetable: Timetable
    node_stop: np.ndarray
    node_time: np.ndarray
    node_kind: np.ndarray
    adjacency: list[list[tuple[int, int]]]
    dep_chain: list[list[tuple[int, int]]]  # per stop: (time, node) sorted

    @staticmethod
    def build(tt: Timetable) -> "TimeExpandedGraph":
        n_nodes = 2 * tt.n_stop_events
        if n_nodes > MAX_EVENT_NODES:
            raise OracleScaleError(
                f"{n_nodes} event nodes exceed the oracle cap {MAX_EVENT_NODES}")
        node_stop = np.empty(n_nodes, dtype=np.int64)
        node_time = np.empty(n_nodes, dtype=np.int64)
        node_kind = np.empty(n_nodes, dtype=np.int64)
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]

        def arr_node(t: int, i: int) -> int:
            return 2 * (int(tt.trip_ev_ptr[t]) + i)

        def dep_node(t: int, i: int) -> int:
            return 2 * (int(tt.trip_ev_ptr[t]) + i) + 1

        for r in range(tt.n_routes):
            seq = tt.route_stop_sequence(r)
            for t in tt.route_trip_ids(r):
                t = int(t)
                base = int(tt.trip_ev_ptr[t])
                for i, p in enumerate(seq):
                    arr = int(tt.trip_arr[base + i])
                    dep = int(tt.trip_dep[base + i])
                    na, nd = arr_node(t, i), dep_node(t, i)
                    node_stop[na] = node_stop[nd] = int(p)
                    node_time[na], node_time[nd] = arr, dep
                    node_kind[na], node_kind[nd] = KIND_ARRIVAL, KIND_DEPARTURE
                    adjacency[na].append((nd, dep - arr))  # stay aboard
                    if i + 1 < len(seq):
                        nxt = arr_node(t, i + 1)
                        adjacency[nd].append((nxt, int(tt.trip_arr[base + i + 1]) - dep))

        dep_chain: list[list[tuple[int, int]]] = [[] for _ in range(tt.n_stops)]
        for node in range(1, n_nodes, 2):
            dep_chain[int(node_stop[node])].append((int(node_time[node]), node))
        for stop in range(tt.n_stops):
            chain = sorted(dep_chain[stop])
            dep_chain[stop] = chain
            for (t1, n1), (t2, n2) in zip(chain, chain[1:]):
                adjacency[n1].append((n2, t2 - t1))

        g = tt.transfer_graph
        for node in range(0, n_nodes, 2):
            stop = int(node_stop[node])
            at = int(node_time[node])
            hook = _chain_entry(dep_chain[stop], at)
            if hook is not None:
                adjacency[node].append((hook[1], hook[0] - at))
            tgt, dur = g.out_edges(stop)
            for v, d in zip(tgt, dur):
                if v >= tt.n_stops:
                    continue
                reach = at + int(d)
                hook = _chain_entry(dep_chain[int(v)], reach)
                if hook is not None:
                    adjacency[node].append((hook[1], hook[0] - at))

        return TimeExpandedGraph(tt, node_stop, node_time, node_kind,
                                 adjacency, dep_chain)

    def earliest_arrival(self, source: int, target: int, departure: int) -> int:
        """Minimum arrival over all journeys, ignoring trip counts."""
        tt = self.timetable
        best = departure if source == target else INFINITY
        g = tt.transfer_graph
        direct = g.edge_duration(source, target)
        if direct is not None:
            best = min(best, departure + direct)

        dist: dict[int, int] = {}
        heap: list[tuple[int, int]] = []

        def seed(chain_stop: int, at: int):
            hook = _chain_entry(self.dep_chain[chain_stop], at)
            if hook is not None and hook[1] not in dist:
                heapq.heappush(heap, (hook[0], hook[1]))

        seed(source, departure)
        tgt, dur = g.out_edges(source)
        for v, d in zip(tgt, dur):
            if v < tt.n_stops:
                seed(int(v), departure + int(d))

        target_in = {}
        src = np.repeat(np.arange(g.vertex_count, dtype=np.int64),
                        np.diff(g.indptr))
        for i in np.flatnonzero(g.targets == target):
            target_in[int(src[i])] = int(g.durations[i])

        while heap:
            t, node = heapq.heappop(heap)
            if node in dist:
                continue
            dist[node] = t
            if self.node_kind[node] == KIND_ARRIVAL:
                stop = int(self.node_stop[node])
                if stop == target:
                    best = min(best, t)
                elif stop in target_in:
                    best = min(best, t + target_in[stop])
            for to, w in self.adjacency[node]:
                if to not in dist:
                    heapq.heappush(heap, (t + w, to))
        return best


def _chain_entry(chain: list[tuple[int, int]], at: int) -> tuple[int, int] | None:
    """First (time, node) in a sorted departure chain with time >= at."""
    lo, hi = 0, len(chain)
    while lo < hi:
        mid = (lo + hi) // 2
        if chain[mid][0] >= at:
            hi = mid
        else:
            lo = mid + 1
    return chain[lo] if lo < len(chain) else None


def earliest_arrival_oracle(tt: Timetable, source: int, target: int,
                            departure: int) -> int:
    return TimeExpandedGraph.build(tt).earliest_arrival(source, target, departure)


def _insert_antichain(bag: list[tuple[int, int, int]],
                      lab: tuple[int, int, int]) -> bool:
    for ex in bag:
        if ex[0] <= lab[0] and ex[1] <= lab[1] and ex[2] <= lab[2]:
            return False
    bag[:] = [ex for ex in bag
              if not (lab[0] <= ex[0] and lab[1] <= ex[1] and lab[2] <= ex[2])]
    bag.append(lab)
    return True


def pareto_oracle(tt: Timetable, source: int, target: int, departure: int,
                  max_trips: int) -> set[tuple[int, int, int]]:
    """Exact Pareto set over (arrival, walking, trips) by bounded exhaustive
    enumeration with dominance memoization.

    States that arrived by walking cannot walk again, so they are memoized
    apart from ride-arrived states: a walk-arrived label must not suppress a
    ride-arrived one it dominates on criteria alone.
    """
    if tt.n_stops > MAX_ORACLE_STOPS:
        raise OracleScaleError(
            f"{tt.n_stops} stops exceed the oracle cap {MAX_ORACLE_STOPS}")
    if max_trips > MAX_ORACLE_TRIPS:
        raise OracleScaleError(
            f"max_trips {max_trips} exceeds the oracle cap {MAX_ORACLE_TRIPS}")
    g = tt.transfer_graph
    V = g.vertex_count
    memo_ride: list[list[tuple[int, int, int]]] = [[] for _ in range(V)]
    memo_walk: list[list[tuple[int, int, int]]] = [[] for _ in range(V)]
    work: deque[tuple[int, int, int, int, bool]] = deque()

    def push_ride(v: int, arr: int, walk: int, trips: int):
        if _insert_antichain(memo_ride[v], (arr, walk, trips)):
            work.append((v, arr, walk, trips, True))

    def push_walk(v: int, arr: int, walk: int, trips: int):
        lab = (arr, walk, trips)
        for ex in memo_ride[v]:
            if ex[0] <= arr and ex[1] <= walk and ex[2] <= trips:
                return
        if _insert_antichain(memo_walk[v], lab):
            work.append((v, arr, walk, trips, False))

    push_ride(source, departure, 0, 0)
    while work:
        v, arr, walk, trips, can_walk = work.popleft()
        if can_walk:
            tgt, dur = g.out_edges(v)
            for v2, d in zip(tgt, dur):
                push_walk(int(v2), arr + int(d), walk + int(d), trips)
        if v >= tt.n_stops or trips == max_trips:
            continue
        for r, pos in tt.routes_serving(v):
            trips_ids = tt.route_trip_ids(r)
            ntr = len(trips_ids)
            lo, hi = 0, ntr
            while lo < hi:
                mid = (lo + hi) // 2
                gid = int(trips_ids[mid])
                if tt.trip_dep[tt.trip_ev_ptr[gid] + pos] >= arr:
                    hi = mid
                else:
                    lo = mid + 1
            if lo == ntr:
                continue
            gid = int(trips_ids[lo])
            seq = tt.route_stop_sequence(r)
            base = int(tt.trip_ev_ptr[gid])
            for i in range(pos + 1, len(seq)):
                push_ride(int(seq[i]), int(tt.trip_arr[base + i]), walk, trips + 1)

    final: list[tuple[int, int, int]] = []
    for lab in memo_ride[target] + memo_walk[target]:
        _insert_antichain(final, lab)
    return set(final)
