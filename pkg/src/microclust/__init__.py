"""Market microstructure measures on 10-second intervals, and minimax-linkage
prototype selection among them."""
from .classify import Direction, classify, classify_clnv, classify_emo, classify_lr, tick_test
from .distance import DistanceMatrix, average_distances, correlation_distance, pairwise_distances
from .engine import SymbolDay, build_panel, split_by_symbol
from .estimators import MeasureTransformer, MinimaxLinkage, PrototypeSelector
from .ingest import (DailyReference, compute_daily_reference, load_daily_references,
                     parse_quotes, parse_trades, session_clip)
from .minimax import (Cluster, PrototypeDendrogram, cut_at_height, minimax_linkage_cluster,
                      minimax_radius)
from .panel import MeasurePanel
from .pipeline import PipelineConfig, RunReport, emit_prototype_table, reduce_registry, run_pipeline
from .registry import MeasureId, full_registry, reduced_registry
from .render import render_dendrogram, to_newick, to_svg
from .synth import SynthSpec, generate_day, generate_planted_blocks

__version__ = "0.1.0"

__all__ = [
    "Cluster", "DailyReference", "Direction", "DistanceMatrix", "MeasureId", "MeasurePanel",
    "MeasureTransformer", "MinimaxLinkage", "PipelineConfig", "PrototypeDendrogram",
    "PrototypeSelector", "RunReport", "SymbolDay", "SynthSpec", "average_distances",
    "build_panel", "classify", "classify_clnv", "classify_emo", "classify_lr",
    "compute_daily_reference", "correlation_distance", "cut_at_height", "emit_prototype_table",
    "full_registry", "generate_day", "generate_planted_blocks", "load_daily_references",
    "minimax_linkage_cluster", "minimax_radius", "pairwise_distances", "parse_quotes",
    "parse_trades", "reduce_registry", "reduced_registry", "render_dendrogram", "run_pipeline",
    "session_clip", "split_by_symbol", "tick_test", "to_newick", "to_svg",
]
