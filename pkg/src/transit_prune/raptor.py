"""Round-based earliest-arrival search over (arrival time, number of trips).

Round k holds the best arrivals reachable with at most k trips; labels are
cumulative, so tau[k] is non-increasing in k. Each round scans routes
through stops improved in the previous round, then relaxes outgoing
transfers of stops the scan just improved.

A journey alternates trips and transfers: a walk is only taken right after
riding (or from the source before the first boarding), never after another
walk. To honour that on arbitrary transfer graphs the state keeps two label
tracks per vertex: ``tau_any`` (best arrival by any means; feeds boarding,
the result front and the target bound) and ``tau_ride`` (best arrival whose
last leg is a trip; the only legal start for a walk).

Target pruning (discard any candidate that cannot beat the best known
arrival at the target) is always on. The ``early`` pruning mode additionally
cuts each presorted adjacency list at the first non-competitive transfer;
everything it skips would have been rejected by target pruning anyway, which
is why both modes return identical results while counting different work.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .exceptions import NoJourneyError, PreconditionError, QueryError
from .kernels import PK_NONE, PK_RIDE, PK_SOURCE, PK_WALK
from .model import INFINITY, Journey, Timetable, TransferLeg, TripLeg


class Pruning(enum.Enum):
    OFF = "off"
    EARLY = "early"


@dataclass(frozen=True)
class Query:
    source: int
    target: int
    departure: int
    max_rounds: int = 16
    pruning: Pruning = Pruning.EARLY

    def __post_init__(self):
        if self.max_rounds < 1:
            raise QueryError("max_rounds must be at least 1")
        if self.departure < 0:
            raise QueryError("departure must be non-negative")


@dataclass(frozen=True)
class Counters:
    edges_examined: int = 0
    edges_relaxed: int = 0
    edges_pruned: int = 0

    @staticmethod
    def from_array(a: np.ndarray) -> "Counters":
        return Counters(int(a[0]), int(a[1]), int(a[2]))


@dataclass
class RaptorState:
    """Per-query labels, parent records and work counters.

    ``tau_any[k, v]`` / ``tau_ride[k, v]`` are the two label tracks for
    round k. Parent rows record only rounds that actually wrote a label;
    reconstruction walks down through untouched rounds. Walk parents live on
    the any track and always point at the same round's ride-track label of
    their origin stop. ``ride_marked`` holds stops the current round's route
    scan improved on the ride track (the transfer phase work list);
    ``any_marked`` / ``walk_marked`` collect any-track improvements, which
    seed the next round's scan.
    """

    timetable: Timetable
    source: int
    departure: int
    tau_any: np.ndarray
    tau_ride: np.ndarray
    any_parent: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    ride_parent: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    ride_marked: np.ndarray
    any_marked: np.ndarray
    walk_marked: np.ndarray
    counters: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))
    rounds_run: int = 0
    truncated: bool = False

    @staticmethod
    def allocate(tt: Timetable, source: int, departure: int,
                 max_rounds: int) -> "RaptorState":
        V = tt.transfer_graph.vertex_count
        K = max_rounds
        mk = lambda: tuple(np.zeros((K + 1, V), dtype=np.int64) for _ in range(4))
        state = RaptorState(
            timetable=tt,
            source=source,
            departure=departure,
            tau_any=np.full((K + 1, V), INFINITY, dtype=np.int64),
            tau_ride=np.full((K + 1, V), INFINITY, dtype=np.int64),
            any_parent=mk(),
            ride_parent=mk(),
            ride_marked=np.zeros(V, dtype=bool),
            any_marked=np.zeros(V, dtype=bool),
            walk_marked=np.zeros(V, dtype=bool),
        )
        state.tau_any[0, source] = departure
        state.tau_ride[0, source] = departure
        state.any_parent[0][0, source] = PK_SOURCE
        state.ride_parent[0][0, source] = PK_SOURCE
        return state

    @property
    def edges_examined(self) -> int:
        return int(self.counters[0])

    @property
    def edges_relaxed(self) -> int:
        return int(self.counters[1])

    @property
    def edges_pruned(self) -> int:
        return int(self.counters[2])

    def best_arrival(self, stop: int) -> int:
        return int(self.tau_any[self.rounds_run, stop])


@dataclass(frozen=True)
class ParetoEntry:
    num_trips: int
    arrival: int
    journey: Journey


@dataclass(frozen=True)
class ParetoResult:
    entries: tuple[ParetoEntry, ...]
    counters: Counters
    truncated: bool

    def best_arrival(self) -> int:
        return self.entries[-1].arrival if self.entries else INFINITY


def relax_transfers(state: RaptorState, rnd: int, timetable: Timetable,
                    target: int, pruning: Pruning, backend: str | None = None) -> None:
    """Transfer phase of one round, in ascending stop-id order.

    Consumes ``state.ride_marked``, walk-extends the round's ride-track
    labels in place and flags improved stops in ``state.walk_marked``.
    Counter slots accumulate examined/relaxed/pruned edge counts.
    """
    g = timetable.transfer_graph
    if pruning is Pruning.EARLY and not g.sorted_by_duration:
        raise PreconditionError(
            "early pruning requires a duration-sorted transfer graph")
    kern = kernels.get_kernels(backend)
    apk, apa, apb, _ = state.any_parent
    kern.relax_transfers(g.indptr, g.targets, g.durations,
                         state.ride_marked, state.tau_ride[rnd],
                         state.tau_any[rnd], apk[rnd], apa[rnd], apb[rnd],
                         int(target), pruning is Pruning.EARLY,
                         state.counters, state.walk_marked, timetable.n_stops)


def run_query(tt: Timetable, q: Query, backend: str | None = None) -> RaptorState:
    """Run the rounds and return the raw state (query() wraps this)."""
    n = tt.n_stops
    for name, s in (("source", q.source), ("target", q.target)):
        if not (0 <= s < n):
            raise QueryError(f"{name} stop {s} out of range [0, {n})")
    g = tt.transfer_graph
    if q.pruning is Pruning.EARLY and not g.sorted_by_duration:
        raise PreconditionError(
            "early pruning requires a duration-sorted transfer graph")
    kern = kernels.get_kernels(backend)

    state = RaptorState.allocate(tt, q.source, q.departure, q.max_rounds)
    state.ride_marked[q.source] = True
    state.any_marked[q.source] = True
    relax_transfers(state, 0, tt, q.target, q.pruning, backend)
    marked = state.any_marked | state.walk_marked

    apk, apa, apb, apc = state.any_parent
    rpk, rpa, rpb, rpc = state.ride_parent
    for k in range(1, q.max_rounds + 1):
        if not marked[:n].any():
            return state
        state.tau_any[k] = state.tau_any[k - 1]
        state.tau_ride[k] = state.tau_ride[k - 1]
        state.ride_marked[:] = False
        state.any_marked[:] = False
        state.walk_marked[:] = False
        kern.scan_routes(tt.route_stops_ptr, tt.route_stops,
                         tt.route_trips_ptr, tt.route_trips,
                         tt.trip_ev_ptr, tt.trip_arr, tt.trip_dep,
                         tt.stop_routes_ptr, tt.stop_route_ids, tt.stop_route_pos,
                         marked, state.tau_any[k - 1],
                         state.tau_any[k], state.tau_ride[k],
                         apk[k], apa[k], apb[k], apc[k],
                         rpk[k], rpa[k], rpb[k], rpc[k],
                         int(q.target), state.ride_marked, state.any_marked, n)
        relax_transfers(state, k, tt, q.target, q.pruning, backend)
        state.rounds_run = k
        marked = state.any_marked | state.walk_marked
    state.truncated = bool(marked[:n].any())
    return state


def query(tt: Timetable, q: Query, backend: str | None = None) -> ParetoResult:
    """Full search; returns the Pareto front over (num_trips, arrival)."""
    state = run_query(tt, q, backend)
    entries = []
    tgt = q.target
    if state.tau_any[0, tgt] < INFINITY:
        entries.append(ParetoEntry(0, int(state.tau_any[0, tgt]),
                                   reconstruct(state, 0, tgt)))
    for k in range(1, state.rounds_run + 1):
        if state.tau_any[k, tgt] < state.tau_any[k - 1, tgt]:
            entries.append(ParetoEntry(k, int(state.tau_any[k, tgt]),
                                       reconstruct(state, k, tgt)))
    return ParetoResult(tuple(entries), Counters.from_array(state.counters),
                        state.truncated)


def reconstruct(state: RaptorState, rnd: int, target: int) -> Journey:
    """Walk parent records back from the any-track label of round ``rnd``."""
    tt = state.timetable
    if state.tau_any[rnd, target] >= INFINITY:
        raise NoJourneyError(f"stop {target} unreachable within {rnd} trips")
    apk, apa, apb, apc = state.any_parent
    rpk, rpa, rpb, rpc = state.ride_parent
    legs = []
    k, p = rnd, target
    on_ride_track = False
    while True:
        pk, pa, pb, pc = (rpk, rpa, rpb, rpc) if on_ride_track else (apk, apa, apb, apc)
        while pk[k, p] == PK_NONE:
            k -= 1
            if k < 0:
                raise NoJourneyError(f"no parent chain for stop {p}")
        kind = pk[k, p]
        if kind == PK_SOURCE:
            break
        if kind == PK_WALK:
            frm = int(pa[k, p])
            legs.append(TransferLeg(frm, int(p), int(pb[k, p])))
            p = frm
            on_ride_track = True  # a walk always extends a ride-track label
        elif kind == PK_RIDE:
            gid = int(pa[k, p])
            bpos = int(pb[k, p])
            apos = int(pc[k, p])
            legs.append(TripLeg(gid, bpos, apos))
            r = tt.trip_route[gid]
            p = int(tt.route_stops[tt.route_stops_ptr[r] + bpos])
            k -= 1
            on_ride_track = False  # boarding reads the any track of round k-1
        else:
            raise NoJourneyError(f"corrupt parent record kind {kind}")
    legs.reverse()
    walk_total = sum(l.duration for l in legs if isinstance(l, TransferLeg))
    trips = sum(1 for l in legs if isinstance(l, TripLeg))
    return Journey(legs=tuple(legs), departure=state.departure,
                   arrival=int(state.tau_any[rnd, target]), num_trips=trips,
                   transfer_duration_total=walk_total)
