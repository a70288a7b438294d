"""Query benchmarking: seeded random queries, paired off/early timing,
edge-work counters, network statistics and the density-speedup study."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import t as student_t

from . import kernels, mcraptor, raptor
from .exceptions import CorrelationError, PreconditionError
from .ingest import SyntheticSpec, generate_synthetic, sort_edges
from .model import Timetable, TransferLeg, TripLeg, density
from .raptor import Pruning, Query

ALGORITHMS = ("raptor", "mcraptor")


@dataclass(frozen=True)
class BenchConfig:
    query_count: int = 1000
    seed: int = 0
    algorithms: tuple[str, ...] = ("raptor",)
    pruning_modes: tuple[str, ...] = ("both",)
    warmup_queries: int = 10
    max_rounds: int = 16
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.query_count < 1:
            raise PreconditionError("query_count must be at least 1")
        if self.warmup_queries < 0:
            raise PreconditionError("warmup_queries must be non-negative")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise PreconditionError(f"unknown algorithm {a!r}")
        for m in self.pruning_modes:
            if m not in ("off", "early", "both"):
                raise PreconditionError(f"unknown pruning mode {m!r}")

    def modes(self) -> tuple[Pruning, ...]:
        if "both" in self.pruning_modes:
            return (Pruning.OFF, Pruning.EARLY)
        out = []
        if "off" in self.pruning_modes:
            out.append(Pruning.OFF)
        if "early" in self.pruning_modes:
            out.append(Pruning.EARLY)
        return tuple(out)


@dataclass(frozen=True)
class QueryRow:
    algorithm: str
    pruning: str
    source: int
    target: int
    departure: int
    wall_time_ns: int
    edges_examined: int
    edges_relaxed: int
    edges_pruned: int
    result_hash: str


@dataclass(frozen=True)
class NetworkStats:
    stops: int
    routes: int
    trips: int
    stop_events: int
    edges: int
    density: float
    edge_sort_ns: int


@dataclass
class BenchReport:
    config: BenchConfig
    backend: str
    rows: list[QueryRow]
    aggregates: dict[tuple[str, str], dict[str, float]]
    per_algorithm: dict[str, dict[str, float]]
    network: NetworkStats
    pairs_match: bool

    CSV_HEADER = ("algorithm,pruning,source,target,departure,wall_time_ns,"
                  "edges_examined,edges_relaxed,edges_pruned,result_hash")

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(f"{r.algorithm},{r.pruning},{r.source},{r.target},"
                         f"{r.departure},{r.wall_time_ns},{r.edges_examined},"
                         f"{r.edges_relaxed},{r.edges_pruned},{r.result_hash}")
        for (alg, mode), agg in sorted(self.aggregates.items()):
            lines.append(f"# counters,{alg},{mode},examined={agg['examined']},"
                         f"relaxed={agg['relaxed']},pruned={agg['pruned']}")
            lines.append(f"# time,{alg},{mode},mean_ns={agg['mean_ns']:.0f},"
                         f"median_ns={agg['median_ns']:.0f},p95_ns={agg['p95_ns']:.0f}")
        for alg, agg in sorted(self.per_algorithm.items()):
            if "counter_speedup_pct" in agg:
                lines.append(f"# counters,{alg},counter_speedup_pct="
                             f"{agg['counter_speedup_pct']:.4f}")
            if "speedup_pct" in agg:
                lines.append(f"# time,{alg},speedup_pct={agg['speedup_pct']:.4f}")
        n = self.network
        lines.append(f"# network,stops={n.stops},routes={n.routes},trips={n.trips},"
                     f"stop_events={n.stop_events},edges={n.edges},"
                     f"density={n.density:.10g}")
        lines.append(f"# time,network,edge_sort_ns={n.edge_sort_ns}")
        lines.append(f"# meta,queries={self.config.query_count},"
                     f"seed={self.config.seed},backend={self.backend},"
                     f"query_distribution=uniform-over-stops,"
                     f"pairs_match={str(self.pairs_match).lower()}")
        return "\n".join(lines) + "\n"

    def canonical_text(self) -> str:
        """The CSV with every wall-time figure removed (determinism hash)."""
        out = []
        for line in self.to_csv().splitlines():
            if line.startswith("# time"):
                continue
            if line.startswith("#") or line == self.CSV_HEADER:
                out.append(line)
                continue
            cells = line.split(",")
            del cells[5]  # wall_time_ns
            out.append(",".join(cells))
        return "\n".join(out) + "\n"

    def canonical_sha(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        sidecar = {
            "config": dataclasses.asdict(self.config),
            "backend": self.backend,
            "query_distribution": "uniform-over-stops",
            "pairs_match": self.pairs_match,
            "network": dataclasses.asdict(self.network),
            "canonical_sha256": self.canonical_sha(),
        }
        Path(str(path) + ".json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _leg_token(leg) -> str:
    if isinstance(leg, TripLeg):
        return f"R:{leg.trip}:{leg.board_pos}:{leg.alight_pos}"
    return f"W:{leg.from_stop}:{leg.to_stop}:{leg.duration}"


def result_hash(result) -> str:
    """Stable digest of a query result, excluding timings and counters."""
    parts = []
    for e in result.entries:
        legs = ";".join(_leg_token(l) for l in e.journey.legs)
        walking = getattr(e, "walking", None)
        head = f"{e.num_trips},{e.arrival}"
        if walking is not None:
            head += f",{walking}"
        parts.append(f"{head},[{legs}]")
    blob = "|".join(parts) + ("|truncated" if result.truncated else "")
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _run_single(tt: Timetable, algorithm: str, q: Query,
                backend: str | None):
    if algorithm == "raptor":
        return raptor.query(tt, q, backend)
    return mcraptor.mc_query(tt, q)


def network_stats(tt: Timetable) -> NetworkStats:
    g = tt.transfer_graph
    dens = density(g) if g.vertex_count >= 2 else 0.0
    _, sort_ns = sort_edges(g)
    return NetworkStats(
        stops=tt.n_stops,
        routes=tt.n_routes,
        trips=tt.n_trips,
        stop_events=tt.n_stop_events,
        edges=g.edge_count,
        density=dens,
        edge_sort_ns=int(sort_ns),
    )


def run_bench(tt: Timetable, config: BenchConfig,
              backend: str | None = None) -> BenchReport:
    """Timed paired queries over seeded uniform-random (source, target,
    departure) triples. Off and early run back to back per query (ABAB) so
    cache effects hit both modes alike."""
    modes = config.modes()
    if Pruning.EARLY in modes and not tt.transfer_graph.sorted_by_duration:
        raise PreconditionError(
            "early pruning requires a duration-sorted transfer graph")
    resolved_backend = kernels.resolve_backend(backend)
    rng = np.random.default_rng(config.seed)
    qc = config.query_count
    n = tt.n_stops
    sources = rng.integers(0, n, size=qc)
    targets = rng.integers(0, n, size=qc)
    departures = rng.integers(0, tt.last_departure() + 1, size=qc)

    def make_query(i: int, mode: Pruning) -> Query:
        return Query(int(sources[i]), int(targets[i]), int(departures[i]),
                     max_rounds=config.max_rounds, pruning=mode)

    for i in range(min(config.warmup_queries, qc)):
        for alg in config.algorithms:
            for mode in modes:
                _run_single(tt, alg, make_query(i, mode), backend)

    def run_one(i: int) -> list[QueryRow]:
        rows = []
        for alg in config.algorithms:
            for mode in modes:
                q = make_query(i, mode)
                t0 = time.perf_counter_ns()
                res = _run_single(tt, alg, q, backend)
                dt = time.perf_counter_ns() - t0
                c = res.counters
                rows.append(QueryRow(alg, mode.value, q.source, q.target,
                                     q.departure, dt, c.edges_examined,
                                     c.edges_relaxed, c.edges_pruned,
                                     result_hash(res)))
        return rows

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_query = list(pool.map(run_one, range(qc)))
    else:
        per_query = [run_one(i) for i in range(qc)]
    rows = [r for chunk in per_query for r in chunk]

    aggregates: dict[tuple[str, str], dict[str, float]] = {}
    for alg in config.algorithms:
        for mode in modes:
            sel = [r for r in rows if r.algorithm == alg and r.pruning == mode.value]
            times = [r.wall_time_ns for r in sel]
            aggregates[(alg, mode.value)] = {
                "mean_ns": statistics.fmean(times),
                "median_ns": statistics.median(times),
                "p95_ns": float(np.percentile(times, 95)),
                "examined": sum(r.edges_examined for r in sel),
                "relaxed": sum(r.edges_relaxed for r in sel),
                "pruned": sum(r.edges_pruned for r in sel),
            }

    per_algorithm: dict[str, dict[str, float]] = {}
    pairs_match = True
    if len(modes) == 2:
        for alg in config.algorithms:
            off = aggregates[(alg, "off")]
            early = aggregates[(alg, "early")]
            agg: dict[str, float] = {}
            if off["mean_ns"] > 0:
                agg["speedup_pct"] = 100.0 * (1.0 - early["mean_ns"] / off["mean_ns"])
            if off["examined"] > 0:
                agg["counter_speedup_pct"] = \
                    100.0 * (1.0 - early["examined"] / off["examined"])
            per_algorithm[alg] = agg
        by_key: dict[tuple[str, int, int, int], dict[str, str]] = {}
        for idx, chunk in enumerate(per_query):
            for r in chunk:
                key = (r.algorithm, idx)
                by_key.setdefault(key, {})[r.pruning] = r.result_hash
        for pair in by_key.values():
            if pair.get("off") != pair.get("early"):
                pairs_match = False
                break

    report = BenchReport(config=config, backend=resolved_backend, rows=rows,
                         aggregates=aggregates, per_algorithm=per_algorithm,
                         network=network_stats(tt), pairs_match=pairs_match)
    if config.output:
        report.write(config.output)
    return report


def pearson(xs, ys) -> tuple[float, float]:
    """Sample Pearson correlation with a two-sided t-test p-value."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CorrelationError("inputs must be equal-length vectors")
    n = len(x)
    if n < 3:
        raise CorrelationError("need at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float((dx * dx).sum()) * float((dy * dy).sum()))
    if denom == 0.0:
        raise CorrelationError("correlation undefined: zero variance")
    r = float((dx * dy).sum()) / denom
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    tstat = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(student_t.sf(abs(tstat), n - 2))
    return r, p


@dataclass(frozen=True)
class StudyReport:
    pairs: tuple[tuple[float, float], ...]        # (measured density, speedup %)
    level_means: tuple[tuple[float, float], ...]  # (target density, mean speedup %)
    r: float
    p: float
    strictly_increasing: bool


def speedup_density_study(specs: list[SyntheticSpec], config: BenchConfig,
                          backend: str | None = None) -> StudyReport:
    """Counter-based speedup as a function of transfer-graph density.

    Generates one network per spec, benchmarks off vs early on it and
    correlates measured density with the counter speedup. Needs at least
    three distinct density levels to say anything about a trend.
    """
    levels = sorted({s.target_density for s in specs})
    if len(levels) < 3:
        raise PreconditionError("need at least 3 distinct density levels")
    config = dataclasses.replace(config, pruning_modes=("both",), output=None)
    pairs = []
    by_level: dict[float, list[float]] = {lv: [] for lv in levels}
    for spec in specs:
        tt = generate_synthetic(spec)
        sorted_graph, _ = sort_edges(tt.transfer_graph)
        tt = dataclasses.replace(tt, transfer_graph=sorted_graph)
        report = run_bench(tt, config, backend)
        examined_off = sum(agg["examined"] for (alg, mode), agg
                           in report.aggregates.items() if mode == "off")
        examined_early = sum(agg["examined"] for (alg, mode), agg
                             in report.aggregates.items() if mode == "early")
        speedup = 100.0 * (1.0 - examined_early / examined_off) \
            if examined_off else 0.0
        dens = density(tt.transfer_graph)
        pairs.append((dens, speedup))
        by_level[spec.target_density].append(speedup)
    r, p = pearson([d for d, _ in pairs], [s for _, s in pairs])
    means = tuple((lv, statistics.fmean(by_level[lv])) for lv in levels
                  if by_level[lv])
    increasing = all(b[1] > a[1] for a, b in zip(means, means[1:]))
    return StudyReport(tuple(pairs), means, r, p, increasing)
