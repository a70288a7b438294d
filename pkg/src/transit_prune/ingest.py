"""Timetable construction: GTFS subset loading, footpath derivation, bounded
transitive closure of the transfer graph, duration presorting, and seeded
synthetic network generation."""
from __future__ import annotations

import csv
import heapq
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import GenerationError, IngestError, InvalidGraphError
from .model import StopEvent, Timetable, TransferGraph, parse_hms

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class IngestConfig:
    """Knobs for GTFS ingestion and transfer-graph construction.

    ``walking_speed`` defaults to 4.5 km/h expressed in m/s. Footpaths are
    derived from straight-line distance when transfers.txt is absent, which
    approximates the road-network walks real deployments would use.
    """

    walking_speed: float = 1.25
    footpath_radius: float = 500.0
    closure_threshold: int = 540
    collapse_parallel_edges: bool = True

    def __post_init__(self):
        if self.walking_speed <= 0:
            raise IngestError("walking_speed must be positive")
        if self.footpath_radius < 0:
            raise IngestError("footpath_radius must be non-negative")
        if self.closure_threshold <= 0:
            raise IngestError("closure_threshold must be positive")


@dataclass(frozen=True)
class SyntheticSpec:
    stop_count: int
    route_count: int
    trips_per_route: int
    target_density: float
    seed: int
    max_route_len: int = 8

    def __post_init__(self):
        if self.stop_count <= 0 or self.route_count <= 0 or self.trips_per_route <= 0:
            raise GenerationError("all counts must be positive")
        if not (0.0 <= self.target_density <= 1.0):
            raise GenerationError("target_density must lie in [0, 1]")


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def _read_rows(path: Path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError("missing header row", file=str(path))
        for i, row in enumerate(reader, start=2):
            row["_line"] = i
            rows.append(row)
    return rows


def _field(row: dict, key: str, path: Path):
    val = row.get(key)
    if val is None or val == "":
        raise IngestError(f"missing field {key!r}", file=str(path), line=row["_line"])
    return val.strip()


def load_gtfs(directory: str | Path, config: IngestConfig = IngestConfig()) -> Timetable:
    """Build a timetable from a GTFS directory.

    Requires stops.txt, trips.txt and stop_times.txt. Trips sharing a stop
    sequence are grouped into routes; a trip that would overtake an earlier
    one within its group is split off into a fresh route so the
    sorted-non-overtaking invariant always holds. Transfer edges come from
    transfers.txt when present, otherwise from straight-line footpaths
    within ``footpath_radius``.
    """
    directory = Path(directory)
    for fname in ("stops.txt", "trips.txt", "stop_times.txt"):
        if not (directory / fname).exists():
            raise IngestError("required file missing", file=str(directory / fname))

    stops_path = directory / "stops.txt"
    stop_rows = _read_rows(stops_path)
    stop_ids: list[str] = []
    stop_index: dict[str, int] = {}
    coords: list[tuple[float, float] | None] = []
    for row in stop_rows:
        sid = _field(row, "stop_id", stops_path)
        if sid in stop_index:
            raise IngestError(f"duplicate stop_id {sid!r}", file=str(stops_path),
                              line=row["_line"])
        stop_index[sid] = len(stop_ids)
        stop_ids.append(sid)
        lat, lon = row.get("stop_lat", ""), row.get("stop_lon", "")
        if lat and lon:
            try:
                coords.append((float(lat), float(lon)))
            except ValueError as exc:
                raise IngestError(f"bad coordinate: {exc}", file=str(stops_path),
                                  line=row["_line"]) from exc
        else:
            coords.append(None)

    trips_path = directory / "trips.txt"
    trip_rows = _read_rows(trips_path)
    known_trips = {_field(r, "trip_id", trips_path) for r in trip_rows}

    st_path = directory / "stop_times.txt"
    by_trip: dict[str, list[tuple[int, int, int, int]]] = {}
    for row in _read_rows(st_path):
        tid = _field(row, "trip_id", st_path)
        if tid not in known_trips:
            raise IngestError(f"stop_times references undefined trip {tid!r}",
                              file=str(st_path), line=row["_line"])
        sid = _field(row, "stop_id", st_path)
        if sid not in stop_index:
            raise IngestError(f"stop_times references undefined stop {sid!r}",
                              file=str(st_path), line=row["_line"])
        try:
            arr = parse_hms(_field(row, "arrival_time", st_path))
            dep = parse_hms(_field(row, "departure_time", st_path))
            seq = int(_field(row, "stop_sequence", st_path))
        except ValueError as exc:
            raise IngestError(f"unparseable row: {exc}", file=str(st_path),
                              line=row["_line"]) from exc
        by_trip.setdefault(tid, []).append((seq, stop_index[sid], arr, dep))

    # group trips by identical stop sequence
    groups: dict[tuple[int, ...], list[tuple[str, list[StopEvent]]]] = {}
    for tid in sorted(by_trip):
        entries = sorted(by_trip[tid])
        seq = tuple(s for _, s, _, _ in entries)
        if len(seq) < 2:
            raise IngestError(f"trip {tid!r} visits fewer than 2 stops",
                              file=str(st_path))
        events = [StopEvent(arr, dep) for _, _, arr, dep in entries]
        groups.setdefault(seq, []).append((tid, events))

    routes: list[tuple[list[int], list[list[StopEvent]]]] = []
    for seq in sorted(groups):
        trips = sorted(groups[seq], key=lambda te: ([e.departure for e in te[1]],
                                                    [e.arrival for e in te[1]], te[0]))
        # greedy split into non-overtaking subroutes (FIFO violations are
        # common in real feeds)
        buckets: list[list[tuple[str, list[StopEvent]]]] = []
        for tid, events in trips:
            placed = False
            for bucket in buckets:
                last = bucket[-1][1]
                if all(a.arrival <= b.arrival and a.departure <= b.departure
                       for a, b in zip(last, events)):
                    bucket.append((tid, events))
                    placed = True
                    break
            if not placed:
                buckets.append([(tid, events)])
        for bucket in buckets:
            routes.append((list(seq), [events for _, events in bucket]))

    transfers_path = directory / "transfers.txt"
    edges: list[tuple[int, int, int]] = []
    if transfers_path.exists():
        for row in _read_rows(transfers_path):
            frm = _field(row, "from_stop_id", transfers_path)
            to = _field(row, "to_stop_id", transfers_path)
            for sid in (frm, to):
                if sid not in stop_index:
                    raise IngestError(f"transfer references undefined stop {sid!r}",
                                      file=str(transfers_path), line=row["_line"])
            if frm == to:
                continue
            try:
                dur = int(_field(row, "min_transfer_time", transfers_path))
            except ValueError as exc:
                raise IngestError(f"unparseable row: {exc}",
                                  file=str(transfers_path), line=row["_line"]) from exc
            edges.append((stop_index[frm], stop_index[to], max(1, dur)))
    else:
        edges = _footpath_edges(coords, config)

    graph = TransferGraph.from_edges(len(stop_ids), edges,
                                     collapse_parallel=config.collapse_parallel_edges)
    return Timetable.from_parts(stop_ids, routes, graph)


def _footpath_edges(coords, config: IngestConfig) -> list[tuple[int, int, int]]:
    edges = []
    n = len(coords)
    for i in range(n):
        if coords[i] is None:
            continue
        for j in range(i + 1, n):
            if coords[j] is None:
                continue
            dist = haversine_m(*coords[i], *coords[j])
            if dist <= config.footpath_radius:
                dur = max(1, round(dist / config.walking_speed))
                edges.append((i, j, dur))
                edges.append((j, i, dur))
    return edges


def transitive_closure(graph: TransferGraph, threshold: int) -> TransferGraph:
    """Close the graph under paths of total duration <= threshold.

    The output has an edge (u, v) with weight d exactly when the shortest
    path u -> v in the input has duration d <= threshold and u != v. One
    bounded Dijkstra exploration runs per vertex.
    """
    if threshold <= 0:
        raise InvalidGraphError("closure threshold must be positive")
    indptr, targets, durations = graph.indptr, graph.targets, graph.durations
    n = graph.vertex_count
    out_edges: list[tuple[int, int, int]] = []
    dist = np.full(n, -1, dtype=np.int64)
    for source in range(n):
        touched = [source]
        dist[source] = 0
        heap = [(0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for i in range(indptr[u], indptr[u + 1]):
                v = targets[i]
                nd = d + durations[i]
                if nd > threshold:
                    continue
                if dist[v] == -1 or nd < dist[v]:
                    if dist[v] == -1:
                        touched.append(int(v))
                    dist[v] = nd
                    heapq.heappush(heap, (int(nd), int(v)))
        for v in touched:
            if v != source:
                out_edges.append((source, int(v), int(dist[v])))
            dist[v] = -1
    return TransferGraph.from_edges(n, out_edges, collapse_parallel=False)


def sort_edges(graph: TransferGraph) -> tuple[TransferGraph, int]:
    """Stably sort every adjacency list by (duration, target id).

    Returns the sorted graph (flagged ``sorted_by_duration``) and the elapsed
    wall time in nanoseconds measured on a monotonic clock. The sort is a
    per-vertex permutation: the edge multiset is untouched.
    """
    t0 = time.perf_counter_ns()
    src = np.repeat(np.arange(graph.vertex_count, dtype=np.int64),
                    np.diff(graph.indptr))
    order = np.lexsort((graph.targets, graph.durations, src))
    sorted_graph = TransferGraph(
        vertex_count=graph.vertex_count,
        indptr=graph.indptr.copy(),
        targets=graph.targets[order],
        durations=graph.durations[order],
        sorted_by_duration=True,
    )
    return sorted_graph, time.perf_counter_ns() - t0


def generate_synthetic(spec: SyntheticSpec) -> Timetable:
    """Deterministic random network for tests and benchmarks.

    The transfer graph gets round(target_density * n * (n - 1)) distinct
    directed edges, so the measured density matches the target up to
    rounding. Trips within a route share a schedule shape offset by a
    positive headway, which keeps them departure-sorted and non-overtaking.
    """
    n = spec.stop_count
    pair_count = n * (n - 1)
    m = round(spec.target_density * pair_count)
    if m > 0 and n < 2:
        raise GenerationError("positive density needs at least 2 stops")
    if n < 2:
        raise GenerationError("a route needs at least 2 distinct stops")
    rng = np.random.default_rng(spec.seed)

    routes = []
    for _ in range(spec.route_count):
        length = int(rng.integers(2, min(spec.max_route_len, n) + 1))
        seq = rng.choice(n, size=length, replace=False).astype(np.int64)
        start = int(rng.integers(0, 6 * 3600))
        rides = rng.integers(60, 900, size=length - 1)
        dwells = rng.integers(0, 120, size=length)
        headway = int(rng.integers(300, 1800))
        base = []
        t = start
        for i in range(length):
            arr = t
            dep = arr + int(dwells[i])
            base.append((arr, dep))
            if i < length - 1:
                t = dep + int(rides[i])
        trips = []
        for j in range(spec.trips_per_route):
            off = j * headway
            trips.append([StopEvent(a + off, d + off) for a, d in base])
        routes.append((list(int(s) for s in seq), trips))

    edges: list[tuple[int, int, int]] = []
    if m > 0:
        codes = rng.choice(pair_count, size=m, replace=False)
        us = codes // (n - 1)
        rem = codes % (n - 1)
        vs = rem + (rem >= us)
        durs = rng.integers(30, 901, size=m)
        edges = [(int(u), int(v), int(d)) for u, v, d in zip(us, vs, durs)]
    graph = TransferGraph.from_edges(n, edges, collapse_parallel=False)
    names = tuple(f"s{i}" for i in range(n))
    return Timetable.from_parts(names, routes, graph)
