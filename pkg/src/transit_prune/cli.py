"""Command-line interface.

Exit codes: 0 success (including an empty query result), 1 data error
(unreadable/invalid input, failed verification), 2 usage error (bad flags,
unknown stops, unmet query preconditions). The TRANSIT_PRUNE_LOG environment
variable (error/warn/info/debug) controls diagnostics on stderr; data output
goes to stdout or --out files.
"""
from __future__ import annotations

import argparse
import dataclasses
import difflib
import json
import logging
import os
import sys

from . import bench as bench_mod
from . import kernels, mcraptor, oracle, raptor
from .exceptions import PreconditionError, QueryError, TransitError
from .ingest import (IngestConfig, SyntheticSpec, generate_synthetic,
                     load_gtfs, sort_edges, transitive_closure)
from .model import INFINITY, TransferLeg, TripLeg, format_hms, parse_hms, validate
from .native import load_timetable, save_timetable
from .raptor import Pruning, Query

log = logging.getLogger("transit_prune")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _setup_logging():
    level = os.environ.get("TRANSIT_PRUNE_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "warning": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr,
                        level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _print_stats(stats: bench_mod.NetworkStats):
    ms, rem_ns = divmod(stats.edge_sort_ns, 1_000_000)
    print(f"stops        {stats.stops}")
    print(f"routes       {stats.routes}")
    print(f"trips        {stats.trips}")
    print(f"stop events  {stats.stop_events}")
    print(f"edges        {stats.edges}")
    print(f"density      {stats.density:.6g}")
    print(f"edge sorting {ms} ms {rem_ns // 1000} us")


def cmd_build(args) -> int:
    try:
        config = IngestConfig(walking_speed=args.walk_speed,
                              footpath_radius=args.footpath_radius,
                              closure_threshold=args.threshold)
        if args.gtfs:
            tt = load_gtfs(args.gtfs, config)
        else:
            tt = load_timetable(args.native)
        closed = transitive_closure(tt.transfer_graph, config.closure_threshold)
        sorted_graph, _ = sort_edges(closed)
        tt = dataclasses.replace(tt, transfer_graph=sorted_graph)
        violations = validate(tt)
        if violations:
            for v in violations:
                print(f"invalid timetable: {v}", file=sys.stderr)
            return EXIT_DATA
        save_timetable(tt, args.out)
        _print_stats(bench_mod.network_stats(tt))
        log.info("wrote %s", args.out)
        return EXIT_OK
    except TransitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _resolve_stop(tt, text: str, flag: str) -> int:
    idx = tt.stop_index(text)
    if idx is None:
        near = difflib.get_close_matches(text, tt.stop_names, n=5, cutoff=0.4)
        hint = f" (close matches: {', '.join(near)})" if near else ""
        raise QueryError(f"unknown stop {text!r} for {flag}{hint}")
    return idx


def _journey_legs_json(tt, journey):
    legs = []
    for leg in journey.legs:
        if isinstance(leg, TripLeg):
            r = tt.trip_route[leg.trip]
            seq = tt.route_stop_sequence(r)
            board = tt.trip_event(leg.trip, leg.board_pos)
            alight = tt.trip_event(leg.trip, leg.alight_pos)
            legs.append({
                "type": "ride",
                "trip": int(leg.trip),
                "board_stop": int(seq[leg.board_pos]),
                "alight_stop": int(seq[leg.alight_pos]),
                "board_time_seconds": board.departure,
                "alight_time_seconds": alight.arrival,
            })
        else:
            legs.append({
                "type": "walk",
                "from_stop": leg.from_stop,
                "to_stop": leg.to_stop,
                "duration_seconds": leg.duration,
            })
    return legs


def _leg_text(tt, leg) -> str:
    if isinstance(leg, TripLeg):
        r = tt.trip_route[leg.trip]
        seq = tt.route_stop_sequence(r)
        return (f"trip {leg.trip} {tt.stop_names[seq[leg.board_pos]]}"
                f"->{tt.stop_names[seq[leg.alight_pos]]}")
    return (f"walk {tt.stop_names[leg.from_stop]}->"
            f"{tt.stop_names[leg.to_stop]} ({leg.duration}s)")


def cmd_query(args) -> int:
    try:
        tt = load_timetable(args.net)
    except TransitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        source = _resolve_stop(tt, getattr(args, "from"), "--from")
        target = _resolve_stop(tt, args.to, "--to")
        departure = parse_hms(args.depart)
    except (QueryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.oracle:
        arrival = oracle.earliest_arrival_oracle(tt, source, target, departure)
        print(f"oracle earliest arrival: {format_hms(arrival)}")
        return EXIT_OK

    q = Query(source, target, departure, max_rounds=args.max_rounds,
              pruning=Pruning(args.pruning))
    try:
        result = mcraptor.mc_query(tt, q) if args.mc else raptor.query(tt, q)
    except (PreconditionError, QueryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.json:
        doc = {
            "source": source,
            "target": target,
            "departure_seconds": departure,
            "algorithm": "mcraptor" if args.mc else "raptor",
            "pruning": args.pruning,
            "truncated": result.truncated,
            "counters": dataclasses.asdict(result.counters),
            "entries": [],
        }
        for e in result.entries:
            entry = {
                "trips": e.num_trips,
                "arrival_seconds": e.arrival,
                "arrival": format_hms(e.arrival),
                "legs": _journey_legs_json(tt, e.journey),
            }
            if args.mc:
                entry["walking_seconds"] = e.walking
            doc["entries"].append(entry)
        print(json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK

    if not result.entries:
        print("no journey found")
        return EXIT_OK
    for e in result.entries:
        walking = f", walk {getattr(e, 'walking', 0)}s" if args.mc else ""
        legs = "; ".join(_leg_text(tt, leg) for leg in e.journey.legs) or "stay"
        plural = "trip" if e.num_trips == 1 else "trips"
        print(f"{e.num_trips} {plural}, arr {format_hms(e.arrival)}{walking}: {legs}")
    if result.truncated:
        print("(front truncated by max rounds)")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        tt = load_timetable(args.net)
        config = bench_mod.BenchConfig(
            query_count=args.queries,
            seed=args.seed,
            algorithms=tuple(args.algorithms.split(",")),
            pruning_modes=(args.pruning,),
            warmup_queries=args.warmup,
            max_rounds=args.max_rounds,
            output=args.out,
            workers=args.workers,
        )
        report = bench_mod.run_bench(tt, config, backend=None)
    except TransitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for (alg, mode), agg in sorted(report.aggregates.items()):
        print(f"{alg}/{mode}: mean {agg['mean_ns'] / 1e6:.3f} ms, "
              f"examined {agg['examined']}, pruned {agg['pruned']}")
    for alg, agg in sorted(report.per_algorithm.items()):
        if "speedup_pct" in agg:
            print(f"{alg}: time speedup {agg['speedup_pct']:.1f}%, "
                  f"counter speedup {agg.get('counter_speedup_pct', 0.0):.1f}%")
    if not report.pairs_match:
        print("error: paired off/early results differ", file=sys.stderr)
        return EXIT_DATA
    if args.out:
        log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        tt = load_timetable(args.net)
    except TransitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _print_stats(bench_mod.network_stats(tt))
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        spec = SyntheticSpec(stop_count=args.stops, route_count=args.routes,
                             trips_per_route=args.trips_per_route,
                             target_density=args.density, seed=args.seed)
        tt = generate_synthetic(spec)
        if not args.no_sort:
            sorted_graph, _ = sort_edges(tt.transfer_graph)
            tt = dataclasses.replace(tt, transfer_graph=sorted_graph)
        violations = validate(tt)
        if violations:
            for v in violations:
                print(f"generator bug: {v}", file=sys.stderr)
            return EXIT_DATA
        save_timetable(tt, args.out)
    except TransitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _print_stats(bench_mod.network_stats(tt))
    return EXIT_OK


def cmd_verify(args) -> int:
    import numpy as np

    try:
        tt = load_timetable(args.net)
    except TransitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not tt.transfer_graph.sorted_by_duration:
        print("error: verification needs a sorted transfer graph "
              "(rebuild or re-gen without --no-sort)", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(args.seed)
    n = tt.n_stops
    queries = [(int(rng.integers(0, n)), int(rng.integers(0, n)),
                int(rng.integers(0, tt.last_departure() + 1)))
               for _ in range(args.queries)]

    identity_ok = True
    counter_ok = True
    oracle_ok = True
    rounds = args.max_rounds
    for src, tgt, dep in queries:
        r_off = raptor.query(tt, Query(src, tgt, dep, rounds, Pruning.OFF))
        r_early = raptor.query(tt, Query(src, tgt, dep, rounds, Pruning.EARLY))
        m_off = mcraptor.mc_query(tt, Query(src, tgt, dep, rounds, Pruning.OFF))
        m_early = mcraptor.mc_query(tt, Query(src, tgt, dep, rounds, Pruning.EARLY))
        if bench_mod.result_hash(r_off) != bench_mod.result_hash(r_early):
            identity_ok = False
        if bench_mod.result_hash(m_off) != bench_mod.result_hash(m_early):
            identity_ok = False
        for off, early in ((r_off, r_early), (m_off, m_early)):
            if off.counters.edges_examined != (early.counters.edges_examined
                                               + early.counters.edges_pruned):
                counter_ok = False
        ea = oracle.earliest_arrival_oracle(tt, src, tgt, dep)
        if not r_off.truncated and r_off.best_arrival() != ea:
            oracle_ok = False
        if (tt.n_stops <= oracle.MAX_ORACLE_STOPS
                and rounds <= oracle.MAX_ORACLE_TRIPS):
            expected = oracle.pareto_oracle(tt, src, tgt, dep, rounds)
            got = {(e.arrival, e.walking, e.num_trips) for e in m_off.entries}
            if got != expected:
                oracle_ok = False

    print(f"pruning-identity: {'PASS' if identity_ok else 'FAIL'}")
    print(f"counter-accounting: {'PASS' if counter_ok else 'FAIL'}")
    print(f"oracle-agreement: {'PASS' if oracle_ok else 'FAIL'}")
    return EXIT_OK if (identity_ok and counter_ok and oracle_ok) else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transit-prune",
        description="Timetable routing with sorted-transfer early pruning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="ingest, close, sort and write a network")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gtfs", help="GTFS directory")
    src.add_argument("--native", help="existing native network file")
    p.add_argument("--threshold", type=int, required=True,
                   help="transitive closure threshold in seconds")
    p.add_argument("--walk-speed", type=float, default=1.25,
                   help="walking speed in m/s (default 1.25)")
    p.add_argument("--footpath-radius", type=float, default=500.0,
                   help="straight-line footpath radius in meters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="run a single query")
    p.add_argument("--net", required=True)
    p.add_argument("--from", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--depart", required=True, help="departure time HH:MM:SS")
    p.add_argument("--mc", action="store_true",
                   help="optimize walking time as a third criterion")
    p.add_argument("--pruning", choices=["off", "early"], default="early")
    p.add_argument("--max-rounds", type=int, default=16)
    p.add_argument("--json", action="store_true")
    p.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run the benchmark harness")
    p.add_argument("--net", required=True)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pruning", choices=["off", "early", "both"], default="both")
    p.add_argument("--algorithms", default="raptor",
                   help="comma-separated: raptor,mcraptor")
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--max-rounds", type=int, default=16)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel query workers (wall times not comparable)")
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="print network statistics")
    p.add_argument("--net", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gen", help="generate a synthetic network")
    p.add_argument("--stops", type=int, required=True)
    p.add_argument("--routes", type=int, required=True)
    p.add_argument("--trips-per-route", type=int, default=4)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--no-sort", action="store_true",
                   help="keep the transfer graph unsorted")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="cross-check a network against the oracles")
    p.add_argument("--net", required=True)
    p.add_argument("--queries", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=6)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
