"""Immutable network model: stops, routes, trips, transfer graph, journeys.

Times are integer seconds from the start of the service day. All containers
are numpy-backed and frozen after construction; routing state never mutates
them, so a single timetable can be shared freely between concurrent queries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .exceptions import InvalidGraphError, NotAPathError

# Sentinel for "not reachable". Finite times live in [0, 2**31); the sentinel
# leaves headroom so that adding any finite duration cannot wrap int64.
INFINITY = 1 << 62

MAX_FINITE_TIME = (1 << 31) - 1


def saturating_add(t: int, d: int) -> int:
    """Add a duration to a time; INFINITY absorbs."""
    if t >= INFINITY:
        return INFINITY
    return t + d


def is_finite(t: int) -> bool:
    return 0 <= t < INFINITY


def parse_hms(text: str) -> int:
    """Parse HH:MM:SS into seconds. Hours may exceed 23 (post-midnight trips)."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValueError(f"expected HH:MM:SS, got {text!r}")
    h, m, s = (int(p) for p in parts)
    if h < 0 or not (0 <= m < 60) or not (0 <= s < 60):
        raise ValueError(f"time out of range: {text!r}")
    return h * 3600 + m * 60 + s


def format_hms(seconds: int) -> str:
    if seconds >= INFINITY:
        return "unreachable"
    h, rem = divmod(int(seconds), 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


class StopEvent(NamedTuple):
    arrival: int
    departure: int


@dataclass(frozen=True, eq=False)
class TransferGraph:
    """Directed weighted adjacency in CSR form.

    ``sorted_by_duration`` records a construction-time guarantee that every
    adjacency list is in non-decreasing duration order (ties broken by
    ascending target id); it is required by early-pruned queries.
    """

    vertex_count: int
    indptr: np.ndarray      # int64, len vertex_count + 1
    targets: np.ndarray     # int64, len edge_count
    durations: np.ndarray   # int64, len edge_count
    sorted_by_duration: bool = False

    def __post_init__(self):
        if self.vertex_count < 0:
            raise InvalidGraphError("negative vertex count")
        if len(self.indptr) != self.vertex_count + 1:
            raise InvalidGraphError("indptr length must be vertex_count + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.targets):
            raise InvalidGraphError("indptr does not span the edge arrays")
        if np.any(np.diff(self.indptr) < 0):
            raise InvalidGraphError("indptr must be non-decreasing")
        if len(self.targets) != len(self.durations):
            raise InvalidGraphError("targets and durations length mismatch")
        if len(self.targets):
            if self.targets.min() < 0 or self.targets.max() >= self.vertex_count:
                raise InvalidGraphError("edge target out of range")
            if self.durations.min() <= 0:
                raise InvalidGraphError("edge durations must be strictly positive")
            if self.durations.max() >= INFINITY:
                raise InvalidGraphError("edge durations must be finite")
            src = np.repeat(np.arange(self.vertex_count, dtype=np.int64),
                            np.diff(self.indptr))
            if np.any(src == self.targets):
                raise InvalidGraphError("self-loop edges are not allowed")

    @property
    def edge_count(self) -> int:
        return int(len(self.targets))

    def out_edges(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """(targets, durations) views for vertex u."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.targets[lo:hi], self.durations[lo:hi]

    def edge_duration(self, u: int, v: int) -> int | None:
        """Duration of edge (u, v), or None if absent."""
        tgt, dur = self.out_edges(u)
        hits = np.flatnonzero(tgt == v)
        if hits.size == 0:
            return None
        return int(dur[hits[0]])

    @staticmethod
    def from_edges(vertex_count: int,
                   edges: Iterable[tuple[int, int, int]],
                   collapse_parallel: bool = True,
                   sorted_by_duration: bool = False) -> "TransferGraph":
        """Build from (source, target, duration) triples.

        Parallel edges between the same ordered pair collapse to the minimum
        duration by default; a slower duplicate can never appear in an
        optimal journey.
        """
        rows = list(edges)
        if not rows:
            return TransferGraph(vertex_count,
                                 np.zeros(vertex_count + 1, dtype=np.int64),
                                 np.empty(0, dtype=np.int64),
                                 np.empty(0, dtype=np.int64),
                                 sorted_by_duration)
        arr = np.asarray(rows, dtype=np.int64)
        src, tgt, dur = arr[:, 0], arr[:, 1], arr[:, 2]
        if src.min() < 0 or src.max() >= vertex_count:
            raise InvalidGraphError("edge source out of range")
        if collapse_parallel:
            order = np.lexsort((dur, tgt, src))
            src, tgt, dur = src[order], tgt[order], dur[order]
            keep = np.ones(len(src), dtype=bool)
            keep[1:] = (src[1:] != src[:-1]) | (tgt[1:] != tgt[:-1])
            src, tgt, dur = src[keep], tgt[keep], dur[keep]
        else:
            order = np.lexsort((tgt, src))
            src, tgt, dur = src[order], tgt[order], dur[order]
        indptr = np.zeros(vertex_count + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return TransferGraph(vertex_count, indptr, tgt, dur, sorted_by_duration)


@dataclass(frozen=True, eq=False)
class Timetable:
    """The search substrate: stops, routes, trips, and the transfer graph.

    A route is the set of trips sharing one stop sequence; ``route_stops_ptr``
    / ``route_stops`` hold the sequences in CSR form and
    ``route_trips_ptr`` / ``route_trips`` the trip ids per route, sorted by
    departure. Trip events live in flat arrays indexed via ``trip_ev_ptr``.
    ``routes_by_stop`` (CSR: ``stop_routes_ptr``, ``stop_route_ids``,
    ``stop_route_pos``) is the exact inverse of the stop sequences.
    """

    n_stops: int
    stop_names: tuple[str, ...]
    route_stops_ptr: np.ndarray
    route_stops: np.ndarray
    route_trips_ptr: np.ndarray
    route_trips: np.ndarray
    trip_route: np.ndarray
    trip_ev_ptr: np.ndarray
    trip_arr: np.ndarray
    trip_dep: np.ndarray
    transfer_graph: TransferGraph
    stop_routes_ptr: np.ndarray = field(repr=False, default=None)
    stop_route_ids: np.ndarray = field(repr=False, default=None)
    stop_route_pos: np.ndarray = field(repr=False, default=None)

    @property
    def n_routes(self) -> int:
        return len(self.route_stops_ptr) - 1

    @property
    def n_trips(self) -> int:
        return len(self.trip_route)

    @property
    def n_stop_events(self) -> int:
        return int(len(self.trip_arr))

    def route_stop_sequence(self, r: int) -> np.ndarray:
        return self.route_stops[self.route_stops_ptr[r]:self.route_stops_ptr[r + 1]]

    def route_trip_ids(self, r: int) -> np.ndarray:
        return self.route_trips[self.route_trips_ptr[r]:self.route_trips_ptr[r + 1]]

    def trip_events(self, t: int) -> list[StopEvent]:
        lo, hi = self.trip_ev_ptr[t], self.trip_ev_ptr[t + 1]
        return [StopEvent(int(a), int(d))
                for a, d in zip(self.trip_arr[lo:hi], self.trip_dep[lo:hi])]

    def trip_event(self, t: int, pos: int) -> StopEvent:
        base = self.trip_ev_ptr[t]
        return StopEvent(int(self.trip_arr[base + pos]), int(self.trip_dep[base + pos]))

    def routes_serving(self, stop: int) -> list[tuple[int, int]]:
        lo, hi = self.stop_routes_ptr[stop], self.stop_routes_ptr[stop + 1]
        return [(int(r), int(p))
                for r, p in zip(self.stop_route_ids[lo:hi], self.stop_route_pos[lo:hi])]

    def stop_index(self, name_or_id: str) -> int | None:
        """Resolve a stop by display name, else by numeric index."""
        try:
            return self.stop_names.index(name_or_id)
        except ValueError:
            pass
        try:
            idx = int(name_or_id)
        except ValueError:
            return None
        return idx if 0 <= idx < self.n_stops else None

    def last_departure(self) -> int:
        return int(self.trip_dep.max()) if len(self.trip_dep) else 0

    @staticmethod
    def from_parts(stop_names: Sequence[str],
                   routes: Sequence[tuple[Sequence[int], Sequence[Sequence[StopEvent]]]],
                   transfer_graph: TransferGraph) -> "Timetable":
        """Assemble from per-route (stop_sequence, [trip events...]) pairs.

        Trips receive dense ids grouped by route in listed order.
        """
        n_stops = len(stop_names)
        rs_ptr = [0]
        rs_flat: list[int] = []
        rt_ptr = [0]
        rt_flat: list[int] = []
        trip_route: list[int] = []
        ev_ptr = [0]
        arr_flat: list[int] = []
        dep_flat: list[int] = []
        gid = 0
        for r, (seq, trips) in enumerate(routes):
            rs_flat.extend(int(s) for s in seq)
            rs_ptr.append(len(rs_flat))
            for events in trips:
                rt_flat.append(gid)
                trip_route.append(r)
                for ev in events:
                    arr_flat.append(int(ev[0]))
                    dep_flat.append(int(ev[1]))
                ev_ptr.append(len(arr_flat))
                gid += 1
            rt_ptr.append(len(rt_flat))

        sr_ptr = np.zeros(n_stops + 1, dtype=np.int64)
        rs_flat_arr = np.asarray(rs_flat, dtype=np.int64)
        rs_ptr_arr = np.asarray(rs_ptr, dtype=np.int64)
        if len(rs_flat_arr):
            if rs_flat_arr.min() < 0 or rs_flat_arr.max() >= n_stops:
                raise InvalidGraphError("route references a stop id out of range")
        np.add.at(sr_ptr, rs_flat_arr + 1, 1)
        np.cumsum(sr_ptr, out=sr_ptr)
        sr_route = np.empty(len(rs_flat_arr), dtype=np.int64)
        sr_pos = np.empty(len(rs_flat_arr), dtype=np.int64)
        cursor = sr_ptr[:-1].copy()
        for r in range(len(rs_ptr) - 1):
            for pos, s in enumerate(rs_flat_arr[rs_ptr[r]:rs_ptr[r + 1]]):
                at = cursor[s]
                sr_route[at] = r
                sr_pos[at] = pos
                cursor[s] += 1

        return Timetable(
            n_stops=n_stops,
            stop_names=tuple(stop_names),
            route_stops_ptr=rs_ptr_arr,
            route_stops=rs_flat_arr,
            route_trips_ptr=np.asarray(rt_ptr, dtype=np.int64),
            route_trips=np.asarray(rt_flat, dtype=np.int64),
            trip_route=np.asarray(trip_route, dtype=np.int64),
            trip_ev_ptr=np.asarray(ev_ptr, dtype=np.int64),
            trip_arr=np.asarray(arr_flat, dtype=np.int64),
            trip_dep=np.asarray(dep_flat, dtype=np.int64),
            transfer_graph=transfer_graph,
            stop_routes_ptr=sr_ptr,
            stop_route_ids=sr_route,
            stop_route_pos=sr_pos,
        )


@dataclass(frozen=True)
class TripLeg:
    trip: int
    board_pos: int
    alight_pos: int


@dataclass(frozen=True)
class TransferLeg:
    from_stop: int
    to_stop: int
    duration: int


Leg = Union[TripLeg, TransferLeg]


@dataclass(frozen=True)
class Journey:
    legs: tuple[Leg, ...]
    departure: int
    arrival: int
    num_trips: int
    transfer_duration_total: int

    def leg_endpoints(self, timetable: Timetable) -> list[tuple[int, int]]:
        """(start_stop, end_stop) per leg, for connectivity checks."""
        out = []
        for leg in self.legs:
            if isinstance(leg, TripLeg):
                r = timetable.trip_route[leg.trip]
                seq = timetable.route_stop_sequence(r)
                out.append((int(seq[leg.board_pos]), int(seq[leg.alight_pos])))
            else:
                out.append((leg.from_stop, leg.to_stop))
        return out


def replay_journey(timetable: Timetable, journey: Journey) -> int:
    """Forward-simulate the legs from the journey departure; returns arrival.

    Raises ValueError if a trip leg departs before the passenger is present.
    """
    t = journey.departure
    for leg in journey.legs:
        if isinstance(leg, TripLeg):
            board = timetable.trip_event(leg.trip, leg.board_pos)
            if board.departure < t:
                raise ValueError("trip departs before passenger arrives")
            t = timetable.trip_event(leg.trip, leg.alight_pos).arrival
        else:
            t = saturating_add(t, leg.duration)
    return t


def graphs_equal(a: TransferGraph, b: TransferGraph) -> bool:
    return (a.vertex_count == b.vertex_count
            and a.sorted_by_duration == b.sorted_by_duration
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.targets, b.targets)
            and np.array_equal(a.durations, b.durations))


def timetables_equal(a: Timetable, b: Timetable) -> bool:
    if a.n_stops != b.n_stops or a.stop_names != b.stop_names:
        return False
    arrays = ("route_stops_ptr", "route_stops", "route_trips_ptr", "route_trips",
              "trip_route", "trip_ev_ptr", "trip_arr", "trip_dep",
              "stop_routes_ptr", "stop_route_ids", "stop_route_pos")
    if not all(np.array_equal(getattr(a, n), getattr(b, n)) for n in arrays):
        return False
    return graphs_equal(a.transfer_graph, b.transfer_graph)


def density(graph: TransferGraph) -> float:
    """Edge count over the maximum possible |V|(|V|-1) directed edges."""
    if graph.vertex_count < 2:
        raise InvalidGraphError("density requires at least 2 vertices")
    return graph.edge_count / (graph.vertex_count * (graph.vertex_count - 1))


def path_duration(graph: TransferGraph, path: Sequence[int]) -> int:
    """Sum of edge durations along a vertex path; empty/singleton paths are 0."""
    total = 0
    for u, v in zip(path, path[1:]):
        d = graph.edge_duration(int(u), int(v))
        if d is None:
            raise NotAPathError(int(u), int(v))
        total += d
    return total


@dataclass(frozen=True)
class Violation:
    code: str
    location: str
    message: str

    def __str__(self):
        return f"{self.code} at {self.location}: {self.message}"


def validate(tt: Timetable) -> list[Violation]:
    """Full-scan integrity check; returns every violated invariant.

    An empty list means the timetable is well formed. Violations are data,
    not errors: planted defects surface here instead of raising.
    """
    out: list[Violation] = []
    g = tt.transfer_graph

    if g.vertex_count < tt.n_stops:
        out.append(Violation("graph-too-small", "transfer_graph",
                             f"{g.vertex_count} vertices < {tt.n_stops} stops"))
    src = np.repeat(np.arange(g.vertex_count, dtype=np.int64), np.diff(g.indptr))
    for i in np.flatnonzero(src == g.targets):
        out.append(Violation("self-loop", f"edge ({src[i]},{g.targets[i]})",
                             "self-loop edges are not allowed"))
    for i in np.flatnonzero(g.durations <= 0):
        out.append(Violation("nonpositive-duration",
                             f"edge ({src[i]},{g.targets[i]})",
                             f"duration {g.durations[i]}"))
    for u in range(g.vertex_count):
        tgt = g.targets[g.indptr[u]:g.indptr[u + 1]]
        if len(tgt) > 1 and len(np.unique(tgt)) != len(tgt):
            out.append(Violation("parallel-edges", f"vertex {u}",
                                 "duplicate edges to the same target"))
    if g.sorted_by_duration:
        for u in range(g.vertex_count):
            dur = g.durations[g.indptr[u]:g.indptr[u + 1]]
            if len(dur) > 1 and np.any(np.diff(dur) < 0):
                out.append(Violation("unsorted-adjacency", f"vertex {u}",
                                     "flag says sorted but durations decrease"))

    if len(tt.trip_arr):
        bad = (tt.trip_arr < 0) | (tt.trip_arr > MAX_FINITE_TIME)
        for i in np.flatnonzero(bad):
            out.append(Violation("time-out-of-range", f"event {i}",
                                 f"arrival {tt.trip_arr[i]}"))

    for t in range(tt.n_trips):
        lo, hi = tt.trip_ev_ptr[t], tt.trip_ev_ptr[t + 1]
        arr, dep = tt.trip_arr[lo:hi], tt.trip_dep[lo:hi]
        for i in np.flatnonzero(arr > dep):
            out.append(Violation("negative-dwell", f"trip {t} position {i}",
                                 f"arrival {arr[i]} > departure {dep[i]}"))
        if len(arr) > 1:
            for i in np.flatnonzero(dep[:-1] > arr[1:]):
                out.append(Violation("negative-travel", f"trip {t} positions {i}->{i + 1}",
                                     f"departure {dep[i]} > arrival {arr[i + 1]}"))

    seen_trip = np.zeros(tt.n_trips, dtype=bool)
    for r in range(tt.n_routes):
        seq = tt.route_stop_sequence(r)
        if len(seq) < 2:
            out.append(Violation("short-route", f"route {r}",
                                 f"stop sequence has length {len(seq)}"))
        trips = tt.route_trip_ids(r)
        L = len(seq)
        for t in trips:
            if seen_trip[t]:
                out.append(Violation("trip-in-two-routes", f"trip {t}",
                                     "trip assigned to more than one route"))
            seen_trip[t] = True
            if tt.trip_route[t] != r:
                out.append(Violation("trip-route-mismatch", f"trip {t}",
                                     f"trip_route says {tt.trip_route[t]}, listed under {r}"))
            if tt.trip_ev_ptr[t + 1] - tt.trip_ev_ptr[t] != L:
                out.append(Violation("event-length-mismatch", f"trip {t}",
                                     "event count differs from route stop count"))
        for a, b in zip(trips, trips[1:]):
            la, lb = tt.trip_ev_ptr[a], tt.trip_ev_ptr[b]
            n = min(tt.trip_ev_ptr[a + 1] - la, tt.trip_ev_ptr[b + 1] - lb)
            arr_ok = np.all(tt.trip_arr[la:la + n] <= tt.trip_arr[lb:lb + n])
            dep_ok = np.all(tt.trip_dep[la:la + n] <= tt.trip_dep[lb:lb + n])
            if not (arr_ok and dep_ok):
                out.append(Violation("trip-overtaking", f"route {r} trips {a},{b}",
                                     "later trip overtakes earlier trip"))
    for t in np.flatnonzero(~seen_trip):
        out.append(Violation("orphan-trip", f"trip {t}", "trip not listed in any route"))

    # routes_by_stop must be the exact inverse of the stop sequences
    pairs = set()
    for r in range(tt.n_routes):
        for pos, s in enumerate(tt.route_stop_sequence(r)):
            pairs.add((int(s), r, pos))
    inv = set()
    for s in range(tt.n_stops):
        for r, pos in tt.routes_serving(s):
            inv.add((s, r, pos))
    for missing in pairs - inv:
        out.append(Violation("routes-by-stop-missing", f"stop {missing[0]}",
                             f"route {missing[1]} pos {missing[2]} not indexed"))
    for extra in inv - pairs:
        out.append(Violation("routes-by-stop-extra", f"stop {extra[0]}",
                             f"route {extra[1]} pos {extra[2]} not in sequences"))
    return out
