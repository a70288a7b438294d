"""Serialization: the TPRN binary container and the line-oriented text format.

Both formats are documented in docs/formats.md. The binary container is the
interchange format written by ``build``/``gen``; the text format exists for
small hand-written test fixtures.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import IngestError
from .model import StopEvent, Timetable, TransferGraph

MAGIC = b"TPRN"
FORMAT_VERSION = 1

_ARRAY_FIELDS = (
    "route_stops_ptr", "route_stops", "route_trips_ptr", "route_trips",
    "trip_route", "trip_ev_ptr", "trip_arr", "trip_dep",
    "stop_routes_ptr", "stop_route_ids", "stop_route_pos",
)
_GRAPH_FIELDS = ("indptr", "targets", "durations")


def save_timetable(tt: Timetable, path: str | Path) -> None:
    """Write the binary container. Output bytes are a pure function of the
    timetable, so identical inputs produce identical files."""
    arrays: list[tuple[str, np.ndarray]] = []
    for name in _ARRAY_FIELDS:
        arrays.append((name, np.ascontiguousarray(getattr(tt, name), dtype=np.int64)))
    for name in _GRAPH_FIELDS:
        arrays.append(("graph_" + name,
                       np.ascontiguousarray(getattr(tt.transfer_graph, name),
                                            dtype=np.int64)))
    header = {
        "meta": {
            "n_stops": tt.n_stops,
            "stop_names": list(tt.stop_names),
            "vertex_count": tt.transfer_graph.vertex_count,
            "sorted_by_duration": tt.transfer_graph.sorted_by_duration,
        },
        "arrays": [{"name": n, "dtype": "<i8", "shape": list(a.shape)}
                   for n, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(a.astype("<i8", copy=False).tobytes())


def load_timetable(path: str | Path) -> Timetable:
    path = str(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise IngestError(f"bad magic {magic!r}, not a TPRN file", file=path)
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise IngestError(f"unsupported format version {version}", file=path)
        (hlen,) = struct.unpack("<Q", fh.read(8))
        try:
            header = json.loads(fh.read(hlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IngestError(f"corrupt header: {exc}", file=path) from exc
        data: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            n = int(np.prod(spec["shape"], dtype=np.int64)) if spec["shape"] else 1
            raw = fh.read(n * 8)
            if len(raw) != n * 8:
                raise IngestError(f"truncated array {spec['name']}", file=path)
            data[spec["name"]] = np.frombuffer(raw, dtype="<i8").astype(
                np.int64).reshape(spec["shape"])
    meta = header["meta"]
    graph = TransferGraph(
        vertex_count=int(meta["vertex_count"]),
        indptr=data["graph_indptr"],
        targets=data["graph_targets"],
        durations=data["graph_durations"],
        sorted_by_duration=bool(meta["sorted_by_duration"]),
    )
    return Timetable(
        n_stops=int(meta["n_stops"]),
        stop_names=tuple(meta["stop_names"]),
        transfer_graph=graph,
        **{name: data[name] for name in _ARRAY_FIELDS},
    )


def parse_text(text: str) -> Timetable:
    """Parse the line-oriented fixture format (see docs/formats.md).

    Directives: ``stops N [V]``, ``name I TEXT``, ``route S0 S1 ...``,
    ``trip A0 D0 A1 D1 ...`` (attaches to the last route), ``edge U V DUR``,
    ``sorted``. Times are integer seconds; '#' starts a comment.
    """
    n_stops = None
    vertex_count = None
    names: dict[int, str] = {}
    routes: list[tuple[list[int], list[list[StopEvent]]]] = []
    edges: list[tuple[int, int, int]] = []
    sorted_flag = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw, args = parts[0], parts[1:]
        try:
            if kw == "stops":
                n_stops = int(args[0])
                vertex_count = int(args[1]) if len(args) > 1 else n_stops
            elif kw == "name":
                names[int(args[0])] = " ".join(args[1:])
            elif kw == "route":
                routes.append(([int(a) for a in args], []))
            elif kw == "trip":
                if not routes:
                    raise IngestError("trip before any route", line=lineno)
                vals = [int(a) for a in args]
                if len(vals) % 2:
                    raise IngestError("trip needs arrival/departure pairs", line=lineno)
                events = [StopEvent(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
                if len(events) != len(routes[-1][0]):
                    raise IngestError("trip event count differs from route length",
                                      line=lineno)
                routes[-1][1].append(events)
            elif kw == "edge":
                edges.append((int(args[0]), int(args[1]), int(args[2])))
            elif kw == "sorted":
                sorted_flag = True
            else:
                raise IngestError(f"unknown directive {kw!r}", line=lineno)
        except (ValueError, IndexError) as exc:
            raise IngestError(f"bad line: {raw!r} ({exc})", line=lineno) from exc
    if n_stops is None:
        raise IngestError("missing 'stops' directive")
    graph = TransferGraph.from_edges(vertex_count, edges,
                                     sorted_by_duration=False)
    if sorted_flag:
        from .ingest import sort_edges
        graph, _ = sort_edges(graph)
    stop_names = tuple(names.get(i, f"s{i}") for i in range(n_stops))
    return Timetable.from_parts(stop_names, routes, graph)


def load_text(path: str | Path) -> Timetable:
    return parse_text(Path(path).read_text(encoding="utf-8"))


def dump_text(tt: Timetable) -> str:
    """Canonical text rendering of a timetable."""
    lines = [f"stops {tt.n_stops} {tt.transfer_graph.vertex_count}"]
    for i, nm in enumerate(tt.stop_names):
        if nm != f"s{i}":
            lines.append(f"name {i} {nm}")
    for r in range(tt.n_routes):
        seq = " ".join(str(int(s)) for s in tt.route_stop_sequence(r))
        lines.append(f"route {seq}")
        for t in tt.route_trip_ids(r):
            evs = " ".join(f"{ev.arrival} {ev.departure}" for ev in tt.trip_events(int(t)))
            lines.append(f"trip {evs}")
    g = tt.transfer_graph
    for u in range(g.vertex_count):
        tgt, dur = g.out_edges(u)
        for v, d in zip(tgt, dur):
            lines.append(f"edge {u} {int(v)} {int(d)}")
    if g.sorted_by_duration:
        lines.append("sorted")
    return "\n".join(lines) + "\n"
