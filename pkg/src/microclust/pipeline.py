"""End-to-end run: CSVs in, panels, distance matrices, trees and prototypes out.

Output directory layout::

    panels/<SYMBOL>.csv            interval x measure panel
    distances/<SYMBOL>.csv         per-symbol correlation distances
    average_distance.csv           entrywise mean over symbols
    average_counts.csv             symbols defining each entry
    tree_full.{json,nwk,svg}       all measures that survived sparsity pruning
    tree_reduced.{json,nwk,svg}    after dropping redundant twins
    tree_prototypes.{json,nwk,svg} prototypes only
    prototypes.csv                 rank,name,description,cluster_size,cluster_members
    report.json                    counts and selected prototypes

All of these are byte-identical for identical inputs and configuration.
Stage timings are kept on the in-memory ``RunReport`` only.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .distance import DEFAULT_MIN_SUPPORT, DistanceMatrix, average_distances, pairwise_distances
from .engine import SymbolDay, build_panel, split_by_symbol
from .estimators import CLASSIFIERS, _session_ns
from .ingest import SchemaError, load_daily_references, parse_quotes, parse_trades
from .minimax import Cluster, PrototypeDendrogram, cut_at_height, minimax_linkage_cluster
from .registry import get_measure, redundant_twins, resolve_registry
from .render import render_dendrogram
from .validation import check_cut_height, check_fraction, check_interval, check_positive_int

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Bad configuration; the CLI exits with status 2."""


class DataError(RuntimeError):
    """Unusable input data; the CLI exits with status 3."""


@dataclass
class PipelineConfig:
    trades: Path | None = None
    quotes: Path | None = None
    daily: Path | None = None
    out: Path | None = None
    session: tuple[str, str] = ("09:30:00", "16:00:00")
    interval_secs: float = 10
    classifier: str = "clnv"
    registry: object = "full"
    cut: float = 0.7
    min_support: int = DEFAULT_MIN_SUPPORT
    min_coverage: float = 0.5
    symbols: tuple[str, ...] | None = None
    workers: int | None = None
    seed: int | None = None
    shares_normalizer: str = "adtv"
    iterative: bool = False

    def __post_init__(self):
        for key in ("trades", "quotes", "daily", "out"):
            value = getattr(self, key)
            if value is not None and not isinstance(value, Path):
                setattr(self, key, Path(value))
        if isinstance(self.symbols, str):
            self.symbols = tuple(s.strip() for s in self.symbols.split(",") if s.strip())
        elif self.symbols is not None:
            self.symbols = tuple(self.symbols)
        self.session = tuple(self.session)

    @classmethod
    def from_toml(cls, path, **overrides) -> "PipelineConfig":
        """Keys mirror the ``run`` flags (dashes or underscores); ``overrides`` win."""
        from ._toml import load_toml
        try:
            data = load_toml(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"bad config {path}: {exc}") from exc
        return cls.from_mapping({**data, **{k: v for k, v in overrides.items() if v is not None}})

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        clean = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            clean[name] = value
        return cls(**clean)

    def session_ns(self) -> tuple[int, int]:
        try:
            return _session_ns(self.session)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self, need_inputs: bool = True) -> None:
        try:
            check_interval(self.interval_secs, self.session_ns())
            check_cut_height(self.cut)
            check_positive_int(self.min_support, "min_support")
            check_fraction(self.min_coverage, "min_coverage")
            if self.workers is not None:
                check_positive_int(self.workers, "workers")
            resolve_registry(self.registry)
        except (ValueError, KeyError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"classifier must be one of {', '.join(CLASSIFIERS)}")
        if self.shares_normalizer not in ("adtv", "adrv"):
            raise ConfigError("shares_normalizer must be adtv or adrv")
        if self.out is None:
            raise ConfigError("an output directory is required")
        if need_inputs:
            for key in ("trades", "quotes", "daily"):
                path = getattr(self, key)
                if path is None:
                    raise ConfigError(f"--{key} is required")
                if not path.is_file() or not os.access(path, os.R_OK):
                    raise ConfigError(f"{key} file {path} is not readable")

    def echo(self) -> dict:
        """JSON-safe view of the settings that shape the outputs."""
        reg = self.registry
        if isinstance(reg, (list, tuple)):
            reg = list(reg)
        elif not isinstance(reg, str):
            reg = str(reg)
        return {
            "session": list(self.session),
            "interval_secs": self.interval_secs,
            "classifier": self.classifier,
            "registry": reg,
            "cut": self.cut,
            "min_support": self.min_support,
            "min_coverage": self.min_coverage,
            "symbols": list(self.symbols) if self.symbols is not None else None,
            "seed": self.seed,
            "shares_normalizer": self.shares_normalizer,
            "iterative": self.iterative,
        }


@dataclass
class RunReport:
    counts: dict = field(default_factory=dict)
    dropped_sparse: list = field(default_factory=list)
    dropped_redundant: list = field(default_factory=list)
    failed_symbols: list = field(default_factory=list)
    clusters: list = field(default_factory=list)
    descriptions: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    trees: dict = field(default_factory=dict)

    @property
    def prototypes(self) -> list[str]:
        return [c.prototype for c in self.clusters]

    def to_dict(self) -> dict:
        """Everything except timings and trees, which live in their own files."""
        return {
            "config": self.config,
            "counts": self.counts,
            "failed_symbols": self.failed_symbols,
            "dropped_sparse": self.dropped_sparse,
            "dropped_redundant": self.dropped_redundant,
            "prototypes": [
                {"name": c.prototype, "members": list(c.members)} for c in self.clusters
            ],
        }


def reduce_registry(tree_or_names) -> list[str]:
    """Drop measures made redundant by a twin that is also present.

    Dollar-volume measures give way to share-volume twins, dollar effective
    spreads to proportional ones, raw measures to ADTV-normalized ones.
    Input order is kept; applying it twice changes nothing.
    """
    names = list(tree_or_names.labels if isinstance(tree_or_names, PrototypeDendrogram)
                 else tree_or_names)
    drop = redundant_twins(names)
    return [n for n in names if n not in drop]


def _description(name: str) -> str:
    try:
        return get_measure(name).description
    except KeyError:
        return ""


def emit_prototype_table(report: RunReport, path) -> Path:
    """``rank,name,description,cluster_size,cluster_members``; larger clusters first."""
    path = Path(path)
    order = sorted(report.clusters, key=lambda c: (-len(c.members), c.prototype))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "name", "description", "cluster_size", "cluster_members"])
        for rank, c in enumerate(order, 1):
            desc = report.descriptions.get(c.prototype) or _description(c.prototype)
            w.writerow([rank, c.prototype, desc, len(c.members), ";".join(c.members)])
    return path


def iterative_cut(D: DistanceMatrix, h: float) -> tuple[PrototypeDendrogram, list[Cluster]]:
    """Cut, recluster the prototypes, and repeat until nothing merges below ``h``.

    Each final prototype carries every measure absorbed along the way.
    """
    members = {name: (name,) for name in D.ids}
    while True:
        tree = minimax_linkage_cluster(D)
        clusters = cut_at_height(tree, h)
        if len(clusters) == len(D.ids):
            break
        merged = {}
        for c in clusters:
            merged[c.prototype] = tuple(sorted(
                (m for name in c.members for m in members[name]), key=_order_key(members)))
        members = merged
        D = D.subset([c.prototype for c in clusters])
    final = [Cluster(members[c.prototype], c.prototype) for c in clusters]
    return tree, final


def _order_key(members):
    rank = {}
    for names in members.values():
        for n in names:
            rank.setdefault(n, len(rank))
    return lambda n: rank[n]


def _panel_job(day: SymbolDay, registry, cfg: dict, panel_dir: Path, dist_dir: Path):
    """Worker: panel plus distances for one symbol; errors come back as text."""
    try:
        panel = build_panel(day, registry, session=cfg["session"], interval_ns=cfg["interval_ns"],
                            classifier=cfg["classifier"],
                            shares_normalizer=cfg["shares_normalizer"])
        D = pairwise_distances(panel, min_support=cfg["min_support"],
                               min_coverage=cfg["min_coverage"])
        panel.to_csv(panel_dir / f"{day.symbol}.csv")
        D.to_csv(dist_dir / f"{day.symbol}.csv")
        return day.symbol, D, None
    except Exception as exc:  # one bad symbol must not sink the run
        return day.symbol, None, f"{type(exc).__name__}: {exc}"


def _map_symbols(days, registry, cfg, panel_dir, dist_dir, workers):
    args = (days, [registry] * len(days), [cfg] * len(days),
            [panel_dir] * len(days), [dist_dir] * len(days))
    if workers > 1 and len(days) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_panel_job, *args))
    return [_panel_job(*a) for a in zip(*args)]


def write_trees(out: Path, stem: str, tree: PrototypeDendrogram, cut: float | None, title: str):
    for suffix in ("json", "nwk", "svg"):
        render_dendrogram(tree, out / f"{stem}.{suffix}", cut=cut, title=title)


class _Clock:
    def __init__(self, report):
        self.report = report
        self.t = time.perf_counter()

    def lap(self, stage):
        now = time.perf_counter()
        self.report.timings[stage] = now - self.t
        self.t = now


def cluster_stage(D: DistanceMatrix, config: PipelineConfig, report: RunReport, out: Path,
                  clock: _Clock | None = None) -> RunReport:
    """Everything after averaging: prune, full tree, reduce, cut, prototypes."""
    D, dropped = D.drop_incomplete()
    report.dropped_sparse = dropped
    report.counts["measures_clustered"] = len(D)
    if len(D) == 0:
        raise DataError("no measure has a complete set of distances")

    full = minimax_linkage_cluster(D)
    write_trees(out, "tree_full", full, None, "All measures")
    report.trees["full"] = full

    kept = reduce_registry(full)
    report.dropped_redundant = [n for n in full.labels if n not in set(kept)]
    reduced_D = D.subset(kept)
    t0 = time.perf_counter()
    reduced = minimax_linkage_cluster(reduced_D)
    report.timings["linkage_reduced"] = time.perf_counter() - t0
    write_trees(out, "tree_reduced", reduced, config.cut, "Reduced measures")
    report.trees["reduced"] = reduced
    report.counts["measures_reduced"] = len(kept)

    if config.iterative:
        _, clusters = iterative_cut(reduced_D, config.cut)
    else:
        clusters = cut_at_height(reduced, config.cut)
    report.clusters = clusters
    report.counts["prototypes"] = len(clusters)
    protos = minimax_linkage_cluster(reduced_D.subset([c.prototype for c in clusters]))
    write_trees(out, "tree_prototypes", protos, config.cut, "Prototypes selected")
    report.trees["prototypes"] = protos
    emit_prototype_table(report, out / "prototypes.csv")
    if clock:
        clock.lap("cluster")
    return report


def write_report(report: RunReport, out: Path) -> Path:
    path = out / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def load_inputs(config: PipelineConfig, report: RunReport):
    try:
        trades, t_rej = parse_trades(config.trades)
        quotes, q_rej = parse_quotes(config.quotes)
        refs, d_rej = load_daily_references(config.daily)
    except SchemaError as exc:
        raise DataError(str(exc)) from exc
    report.counts.update({
        "trade_rows": len(trades), "quote_rows": len(quotes),
        "rejected_trade_rows": len(t_rej), "rejected_quote_rows": len(q_rej),
        "rejected_daily_rows": len(d_rej), "reference_symbols": len(refs),
    })
    return trades, quotes, refs


def compute_panels(config: PipelineConfig, report: RunReport, clock: _Clock | None = None):
    """Parse, split and build per-symbol panels and distance matrices."""
    out = Path(config.out)
    trades, quotes, refs = load_inputs(config, report)
    if clock:
        clock.lap("parse")
    session = config.session_ns()
    days = split_by_symbol(trades, quotes, refs, session=session, symbols=config.symbols)
    report.counts["symbols"] = len(days)
    if not days:
        raise DataError("no usable symbols (each needs trades or quotes and a daily reference)")

    registry = resolve_registry(config.registry)
    panel_dir, dist_dir = out / "panels", out / "distances"
    panel_dir.mkdir(parents=True, exist_ok=True)
    dist_dir.mkdir(parents=True, exist_ok=True)
    cfg = {"session": session, "interval_ns": check_interval(config.interval_secs, session),
           "classifier": config.classifier, "shares_normalizer": config.shares_normalizer,
           "min_support": config.min_support, "min_coverage": config.min_coverage}
    workers = config.workers or os.cpu_count() or 1
    results = _map_symbols(days, registry, cfg, panel_dir, dist_dir, workers)
    mats = []
    for symbol, D, err in results:
        if err is not None:
            log.error("%s: failed: %s", symbol, err)
            report.failed_symbols.append(symbol)
        else:
            mats.append(D)
    report.counts["symbols_processed"] = len(mats)
    report.counts["measures"] = len(registry)
    if clock:
        clock.lap("panels")
    if not mats:
        raise DataError("every symbol failed")
    return mats, registry


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Full run; see the module docstring for what lands in ``config.out``."""
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(config=config.echo())
    clock = _Clock(report)
    mats, registry = compute_panels(config, report, clock)
    D = average_distances(mats)
    D.to_csv(out / "average_distance.csv")
    D.to_csv(out / "average_counts.csv", which="counts")
    report.descriptions = {m.name: m.description for m in registry}
    clock.lap("average")
    cluster_stage(D, config, report, out, clock)
    write_report(report, out)
    return report


def run_measures(config: PipelineConfig) -> RunReport:
    """Panels and per-symbol distance matrices only."""
    config.validate()
    Path(config.out).mkdir(parents=True, exist_ok=True)
    report = RunReport(config=config.echo())
    compute_panels(config, report, _Clock(report))
    return report


def run_cluster(distance_dir, config: PipelineConfig) -> RunReport:
    """Average cached per-symbol matrices from ``distance_dir`` and cluster them."""
    config.validate(need_inputs=False)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    files = sorted(Path(distance_dir).glob("*.csv"))
    if not files:
        raise DataError(f"no distance matrices in {distance_dir}")
    try:
        mats = [DistanceMatrix.read_csv(f) for f in files]
        D = average_distances(mats)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    report = RunReport(config=config.echo())
    report.counts["symbols_processed"] = len(mats)
    report.counts["measures"] = len(D)
    D.to_csv(out / "average_distance.csv")
    D.to_csv(out / "average_counts.csv", which="counts")
    cluster_stage(D, config, report, out)
    write_report(report, out)
    return report


__all__ = [
    "ConfigError", "DataError", "PipelineConfig", "RunReport", "cluster_stage",
    "emit_prototype_table", "iterative_cut", "reduce_registry", "run_cluster",
    "run_measures", "run_pipeline",
]
