"""Three-criteria search: arrival time, number of trips, total walking.

Bag-based variant of the round search. Every stop carries antichains of
labels; a label survives only while no other label is at least as good on
all three criteria. Journeys alternate trips and transfers, so each vertex
keeps two bags: ride-arrived labels (which may walk next) and walk-arrived
labels (which may only board). A walk-arrived label never vetoes a
ride-arrived one, no matter how good its criteria are, because it cannot do
what the ride label can.

Early pruning carries over from the single-criterion engine because every
criterion is monotonically non-decreasing in transfer duration: once a walk
candidate is dominated by the target's merged best bag, every longer walk
from the same label is dominated by the same bag entry, so the presorted
edge loop can stop. Off and early modes attempt exactly the same
insertions and therefore return identical Pareto sets.

Labels are plain Python objects rather than kernel arrays: bags are ragged,
orders matter for determinism, and the branchy antichain maintenance gains
nothing from vectorization. The backend flag therefore only affects the
single-criterion engine.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NoJourneyError, PreconditionError, QueryError
from .model import Journey, Timetable, TransferLeg, TripLeg
from .raptor import Counters, Pruning, Query


class McLabel:
    """One Pareto label: arrival, cumulative walking, trips, parent record.

    The parent is ("source",), ("ride", trip, board_pos, alight_pos, prev)
    or ("walk", from_stop, to_vertex, duration, prev).
    """

    __slots__ = ("arrival", "walking", "trips", "parent")

    def __init__(self, arrival: int, walking: int, trips: int, parent: tuple):
        self.arrival = arrival
        self.walking = walking
        self.trips = trips
        self.parent = parent

    @property
    def can_walk(self) -> bool:
        return self.parent[0] != "walk"

    def key(self) -> tuple[int, int, int]:
        return (self.trips, self.arrival, self.walking)

    def __repr__(self):
        return f"McLabel(arr={self.arrival}, walk={self.walking}, trips={self.trips})"


def dominates(a: McLabel, b: McLabel) -> bool:
    """Weak dominance: a is no worse than b on every criterion."""
    return (a.arrival <= b.arrival and a.walking <= b.walking
            and a.trips <= b.trips)


def _covers(arr: int, walk: int, trips: int,
            arr2: int, walk2: int, trips2: int) -> bool:
    return arr <= arr2 and walk <= walk2 and trips <= trips2


class Bag:
    """Criteria antichain. Insertion rejects weakly dominated candidates
    (exact duplicates collapse onto the first-found parent) and evicts
    labels the newcomer improves on."""

    __slots__ = ("labels",)

    def __init__(self):
        self.labels: list[McLabel] = []

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def dominates_values(self, arrival: int, walking: int, trips: int) -> bool:
        for ex in self.labels:
            if _covers(ex.arrival, ex.walking, ex.trips, arrival, walking, trips):
                return True
        return False

    def evict_dominated(self, label: McLabel) -> None:
        self.labels = [ex for ex in self.labels
                       if not _covers(label.arrival, label.walking, label.trips,
                                      ex.arrival, ex.walking, ex.trips)]

    def insert(self, label: McLabel) -> bool:
        if self.dominates_values(label.arrival, label.walking, label.trips):
            return False
        self.evict_dominated(label)
        self.labels.append(label)
        return True


class VertexBags:
    """Ride-arrived and walk-arrived bags of one vertex."""

    __slots__ = ("ride", "walk")

    def __init__(self):
        self.ride = Bag()
        self.walk = Bag()

    def dominated_by_union(self, arrival: int, walking: int, trips: int) -> bool:
        return (self.ride.dominates_values(arrival, walking, trips)
                or self.walk.dominates_values(arrival, walking, trips))

    def insert_ride(self, label: McLabel) -> bool:
        # walk-arrived labels cannot veto a ride-arrived candidate
        if not self.ride.insert(label):
            return False
        self.walk.evict_dominated(label)
        return True

    def insert_walk(self, label: McLabel) -> bool:
        if self.ride.dominates_values(label.arrival, label.walking, label.trips):
            return False
        return self.walk.insert(label)

    def all_labels(self) -> list[McLabel]:
        return self.ride.labels + self.walk.labels

    def pareto_front(self) -> list[McLabel]:
        """Criteria-only Pareto set over both bags (ties keep first found)."""
        front = Bag()
        for lab in self.all_labels():
            front.insert(lab)
        return front.labels


@dataclass
class McState:
    timetable: Timetable
    source: int
    departure: int
    bags: list[VertexBags]
    prev: list[list[McLabel]]
    round_ride: list[list[McLabel]]
    ride_marked: np.ndarray
    walk_marked: np.ndarray
    counters: np.ndarray
    rounds_run: int = 0
    truncated: bool = False

    @staticmethod
    def allocate(tt: Timetable, source: int, departure: int) -> "McState":
        V = tt.transfer_graph.vertex_count
        state = McState(
            timetable=tt,
            source=source,
            departure=departure,
            bags=[VertexBags() for _ in range(V)],
            prev=[[] for _ in range(tt.n_stops)],
            round_ride=[[] for _ in range(tt.n_stops)],
            ride_marked=np.zeros(V, dtype=bool),
            walk_marked=np.zeros(V, dtype=bool),
            counters=np.zeros(3, dtype=np.int64),
        )
        root = McLabel(departure, 0, 0, ("source",))
        state.bags[source].insert_ride(root)
        state.round_ride[source].append(root)
        state.ride_marked[source] = True
        return state


@dataclass(frozen=True)
class McEntry:
    num_trips: int
    arrival: int
    walking: int
    journey: Journey


@dataclass(frozen=True)
class McResult:
    entries: tuple[McEntry, ...]
    counters: Counters
    truncated: bool


def mc_relax_transfers(state: McState, rnd: int, timetable: Timetable,
                       target: int, pruning: Pruning) -> None:
    """Walk-extend every label the route scan of round ``rnd`` created.

    Stops are processed in ascending id, labels in creation order, edges in
    stored (presorted) order. The break scope of early pruning is one
    label's edge loop: a longer transfer cannot rescue a dominated
    candidate, but a different label at the same stop may still compete.
    """
    g = timetable.transfer_graph
    if pruning is Pruning.EARLY and not g.sorted_by_duration:
        raise PreconditionError(
            "early pruning requires a duration-sorted transfer graph")
    early = pruning is Pruning.EARLY
    target_bags = state.bags[target]
    counters = state.counters
    indptr, targets, durations = g.indptr, g.targets, g.durations
    for s in np.flatnonzero(state.ride_marked[:timetable.n_stops]):
        s = int(s)
        lo, hi = int(indptr[s]), int(indptr[s + 1])
        if lo == hi:
            continue
        for label in state.round_ride[s]:
            base_arr = label.arrival
            base_walk = label.walking
            trips = label.trips
            for i in range(lo, hi):
                d = int(durations[i])
                cand_arr = base_arr + d
                cand_walk = base_walk + d
                if early and target_bags.dominated_by_union(cand_arr, cand_walk,
                                                            trips):
                    counters[2] += hi - i
                    break
                counters[0] += 1
                if target_bags.dominated_by_union(cand_arr, cand_walk, trips):
                    continue
                v = int(targets[i])
                cand = McLabel(cand_arr, cand_walk, trips,
                               ("walk", s, v, d, label))
                if state.bags[v].insert_walk(cand):
                    counters[1] += 1
                    if v < timetable.n_stops:
                        state.walk_marked[v] = True


def _scan_routes_mc(state: McState, rnd: int, tt: Timetable, target: int,
                    marked: np.ndarray) -> None:
    route_pos: dict[int, int] = {}
    for p in np.flatnonzero(marked[:tt.n_stops]):
        lo, hi = tt.stop_routes_ptr[p], tt.stop_routes_ptr[p + 1]
        for r, pos in zip(tt.stop_route_ids[lo:hi], tt.stop_route_pos[lo:hi]):
            r, pos = int(r), int(pos)
            if r not in route_pos or pos < route_pos[r]:
                route_pos[r] = pos
    target_bags = state.bags[target]
    for r in sorted(route_pos):
        start = route_pos[r]
        t0, t1 = int(tt.route_trips_ptr[r]), int(tt.route_trips_ptr[r + 1])
        ntr = t1 - t0
        if ntr == 0:
            continue
        s0 = int(tt.route_stops_ptr[r])
        L = int(tt.route_stops_ptr[r + 1]) - s0
        # labels travelling aboard: (trip_idx, walking, parent_label, board_pos),
        # kept as an antichain over (trip_idx, walking)
        aboard: list[tuple[int, int, McLabel, int]] = []
        for i in range(start, L):
            p = int(tt.route_stops[s0 + i])
            for (t_idx, walking, plabel, bpos) in aboard:
                gid = int(tt.route_trips[t0 + t_idx])
                arr = int(tt.trip_arr[tt.trip_ev_ptr[gid] + i])
                if target_bags.dominated_by_union(arr, walking, rnd):
                    continue
                cand = McLabel(arr, walking, rnd, ("ride", gid, bpos, i, plabel))
                if state.bags[p].insert_ride(cand):
                    state.ride_marked[p] = True
                    state.round_ride[p].append(cand)
            for lab in state.prev[p]:
                ready = lab.arrival
                lo_t, hi_t = 0, ntr
                while lo_t < hi_t:
                    mid = (lo_t + hi_t) // 2
                    gid = int(tt.route_trips[t0 + mid])
                    if tt.trip_dep[tt.trip_ev_ptr[gid] + i] >= ready:
                        hi_t = mid
                    else:
                        lo_t = mid + 1
                if lo_t == ntr:
                    continue
                dominated = False
                for (et, ew, _, _) in aboard:
                    if et <= lo_t and ew <= lab.walking:
                        dominated = True
                        break
                if not dominated:
                    aboard = [(et, ew, el, eb) for (et, ew, el, eb) in aboard
                              if not (lo_t <= et and lab.walking <= ew)]
                    aboard.append((lo_t, lab.walking, lab, i))


def mc_query(tt: Timetable, q: Query) -> McResult:
    """Full three-criteria Pareto set reachable within q.max_rounds trips."""
    n = tt.n_stops
    for name, s in (("source", q.source), ("target", q.target)):
        if not (0 <= s < n):
            raise QueryError(f"{name} stop {s} out of range [0, {n})")
    if q.pruning is Pruning.EARLY and not tt.transfer_graph.sorted_by_duration:
        raise PreconditionError(
            "early pruning requires a duration-sorted transfer graph")

    state = McState.allocate(tt, q.source, q.departure)
    mc_relax_transfers(state, 0, tt, q.target, q.pruning)
    marked = state.ride_marked | state.walk_marked

    for k in range(1, q.max_rounds + 1):
        if not marked[:n].any():
            state.truncated = False
            break
        state.prev = [state.bags[p].all_labels() for p in range(n)]
        state.round_ride = [[] for _ in range(n)]
        state.ride_marked[:] = False
        state.walk_marked[:] = False
        _scan_routes_mc(state, k, tt, q.target, marked)
        mc_relax_transfers(state, k, tt, q.target, q.pruning)
        state.rounds_run = k
        marked = state.ride_marked | state.walk_marked
    else:
        state.truncated = bool(marked[:n].any())

    entries = []
    front = state.bags[q.target].pareto_front()
    for label in sorted(front, key=McLabel.key):
        entries.append(McEntry(label.trips, label.arrival, label.walking,
                               _journey_from_label(state, label)))
    return McResult(tuple(entries), Counters.from_array(state.counters),
                    state.truncated)


def _journey_from_label(state: McState, label: McLabel) -> Journey:
    legs = []
    lab = label
    while True:
        parent = lab.parent
        if parent[0] == "source":
            break
        if parent[0] == "walk":
            _, frm, to, d, prev = parent
            legs.append(TransferLeg(int(frm), int(to), int(d)))
            lab = prev
        elif parent[0] == "ride":
            _, gid, bpos, apos, prev = parent
            legs.append(TripLeg(int(gid), int(bpos), int(apos)))
            lab = prev
        else:
            raise NoJourneyError(f"corrupt parent record {parent[0]!r}")
    legs.reverse()
    return Journey(legs=tuple(legs), departure=state.departure,
                   arrival=label.arrival, num_trips=label.trips,
                   transfer_duration_total=label.walking)
