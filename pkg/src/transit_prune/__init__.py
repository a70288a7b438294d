"""Timetable-based public transport routing with sorted-transfer early
pruning: round-based earliest-arrival and three-criteria Pareto search,
GTFS/synthetic ingestion, brute-force oracles and a benchmark harness."""

from .exceptions import (CorrelationError, GenerationError, IngestError,
                         InvalidGraphError, NoJourneyError, NotAPathError,
                         OracleScaleError, PreconditionError, QueryError,
                         TransitError)
from .model import (INFINITY, Journey, StopEvent, Timetable, TransferGraph,
                    TransferLeg, TripLeg, Violation, density, format_hms,
                    parse_hms, path_duration, replay_journey, validate)
from .ingest import (IngestConfig, SyntheticSpec, generate_synthetic,
                     load_gtfs, sort_edges, transitive_closure)
from .native import (dump_text, load_text, load_timetable, parse_text,
                     save_timetable)
from .raptor import (Counters, ParetoEntry, ParetoResult, Pruning, Query,
                     RaptorState, query, reconstruct, relax_transfers,
                     run_query)
from .mcraptor import (Bag, McEntry, McLabel, McResult, McState, VertexBags,
                       dominates, mc_query, mc_relax_transfers)
from .oracle import (TimeExpandedGraph, earliest_arrival_oracle, pareto_oracle)
from .bench import (BenchConfig, BenchReport, NetworkStats, StudyReport,
                    network_stats, pearson, result_hash, run_bench,
                    speedup_density_study)

__version__ = "0.1.0"
