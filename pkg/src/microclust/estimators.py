"""scikit-learn style wrappers around the measure engine and minimax clustering.

``MeasureTransformer`` turns symbol-days into interval x measure panels,
``PrototypeSelector`` keeps one prototype column per cluster of correlated
measures, and ``MinimaxLinkage`` is the bare clusterer on a distance matrix.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from .distance import DEFAULT_MIN_SUPPORT, DistanceMatrix, average_distances, pairwise_distances
from .engine import SymbolDay, build_panel
from .ingest import parse_clock
from .minimax import (cut_at_height, cut_to_n_clusters, labels_from_clusters,
                      minimax_linkage_cluster)
from .panel import MeasurePanel
from .registry import measure_names, resolve_registry
from .validation import (check_cut_height, check_distance_matrix, check_fraction,
                         check_interval, check_panel_array, check_positive_int)

CLASSIFIERS = ("clnv", "lr", "emo")


def _session_ns(session) -> tuple[int, int]:
    open_, close = session
    return (parse_clock(open_) if isinstance(open_, str) else int(open_),
            parse_clock(close) if isinstance(close, str) else int(close))


class MinimaxLinkage(ClusterMixin, BaseEstimator):
    """Agglomerative clustering with minimax linkage.

    Parameters
    ----------
    distance_threshold : float or None, default=0.7
        Cut the tree below this height.  Exactly one of ``distance_threshold``
        and ``n_clusters`` must be set.
    n_clusters : int or None
        Cut the tree into this many clusters instead.
    metric : {"precomputed", "abs_correlation"}
        ``precomputed`` expects a square distance matrix (or a
        ``DistanceMatrix``); ``abs_correlation`` treats each row of X as a
        series and uses ``1 - |corr|`` between rows.
    min_support : int
        Fewest jointly observed points for a correlation (``abs_correlation`` only).

    Attributes
    ----------
    tree_ : PrototypeDendrogram
    labels_ : ndarray of shape (n_samples,)
    n_clusters_ : int
    prototype_indices_ : ndarray, one sample index per cluster
    children_ : ndarray of shape (n_samples - 1, 2)
    distances_ : ndarray of merge heights
    n_leaves_ : int
    """

    def __init__(self, distance_threshold=0.7, n_clusters=None, metric="precomputed",
                 min_support=DEFAULT_MIN_SUPPORT):
        self.distance_threshold = distance_threshold
        self.n_clusters = n_clusters
        self.metric = metric
        self.min_support = min_support

    def _distances(self, X) -> DistanceMatrix:
        if self.metric == "precomputed":
            if isinstance(X, DistanceMatrix):
                check_distance_matrix(X)
                return X
            d = check_distance_matrix(X)
            return DistanceMatrix(tuple(str(i) for i in range(len(d))), d)
        if self.metric == "abs_correlation":
            X = check_panel_array(X, min_rows=1)
            D = pairwise_distances(X.T, min_support=check_positive_int(self.min_support, "min_support"))
            if not D.is_complete:
                raise ValueError(f"undefined correlation distances for pairs {D.undefined_pairs()[:5]}")
            return D
        raise ValueError(f"unknown metric {self.metric!r}")

    def fit(self, X, y=None):
        if (self.distance_threshold is None) == (self.n_clusters is None):
            raise ValueError("set exactly one of distance_threshold and n_clusters")
        D = self._distances(X)
        tree = minimax_linkage_cluster(D)
        if self.n_clusters is not None:
            clusters = cut_to_n_clusters(tree, check_positive_int(self.n_clusters, "n_clusters"))
        else:
            clusters = cut_at_height(tree, check_cut_height(self.distance_threshold))
        index = {name: i for i, name in enumerate(tree.labels)}
        self.tree_ = tree
        self.clusters_ = clusters
        self.labels_ = labels_from_clusters(tree, clusters)
        self.n_clusters_ = len(clusters)
        self.prototype_indices_ = np.array([index[c.prototype] for c in clusters], dtype=int)
        self.children_ = np.array([node.children for node in tree.merges], dtype=int).reshape(-1, 2)
        self.distances_ = np.array([node.height for node in tree.merges], dtype=float)
        self.n_leaves_ = tree.n_leaves
        return self


class PrototypeSelector(SelectorMixin, BaseEstimator):
    """Keep one prototype measure per cluster of mutually correlated measures.

    ``fit`` accepts one panel (2-D array, DataFrame or ``MeasurePanel``) or a
    list of per-symbol panels with identical columns.  Per-panel correlation
    distances are averaged over the panels that define each entry; measures
    left with an undefined averaged distance are dropped before clustering.

    Attributes
    ----------
    distance_ : DistanceMatrix    averaged matrix actually clustered
    tree_ : PrototypeDendrogram
    clusters_ : list of Cluster
    prototypes_ : list of str     prototype names, in cluster order
    dropped_ : list of str        measures removed as incomplete
    """

    def __init__(self, cut=0.7, min_support=DEFAULT_MIN_SUPPORT, min_coverage=0.5):
        self.cut = cut
        self.min_support = min_support
        self.min_coverage = min_coverage

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.allow_nan = True
        return tags

    @staticmethod
    def _unpack(panel):
        if isinstance(panel, MeasurePanel):
            return panel.values, list(panel.measures)
        if hasattr(panel, "columns") and hasattr(panel, "to_numpy"):
            return panel.to_numpy(dtype=float), [str(c) for c in panel.columns]
        return panel, None

    def fit(self, X, y=None):
        cut = check_cut_height(self.cut)
        min_support = check_positive_int(self.min_support, "min_support")
        min_coverage = check_fraction(self.min_coverage, "min_coverage")
        panels = X if isinstance(X, (list, tuple)) else [X]
        if not panels:
            raise ValueError("no panels to fit")
        arrays, names = [], None
        for panel in panels:
            values, cols = self._unpack(panel)
            values = check_panel_array(values)
            if names is None:
                names = cols
            elif cols is not None and cols != names:
                raise ValueError("panels have different measure columns")
            if arrays and values.shape[1] != arrays[0].shape[1]:
                raise ValueError("panels have different numbers of measures")
            arrays.append(values)
        p = arrays[0].shape[1]
        ids = tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))
        mats = [pairwise_distances(a, min_support=min_support, min_coverage=min_coverage, ids=ids)
                for a in arrays]
        D, dropped = average_distances(mats).drop_incomplete()
        if len(D) == 0:
            raise ValueError("every measure has undefined distances")
        self.tree_ = minimax_linkage_cluster(D)
        self.clusters_ = cut_at_height(self.tree_, cut)
        self.prototypes_ = [c.prototype for c in self.clusters_]
        self.distance_ = D
        self.dropped_ = dropped
        self.n_features_in_ = p
        if names is not None:
            self.feature_names_in_ = np.asarray(names, dtype=object)
        keep = set(self.prototypes_)
        self.support_mask_ = np.array([i in keep for i in ids], dtype=bool)
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_mask_")
        return self.support_mask_

    def transform(self, X):
        if isinstance(X, MeasurePanel):
            check_is_fitted(self, "support_mask_")
            names = [m for m, keep in zip(X.measures, self.support_mask_) if keep]
            if len(X.measures) != self.n_features_in_:
                raise ValueError("panel has a different number of measures")
            return X.select(names)
        return super().transform(X)


class MeasureTransformer(TransformerMixin, BaseEstimator):
    """Compute interval x measure panels from ``SymbolDay`` inputs.

    ``transform`` maps one ``SymbolDay`` to a 2-D array, or a list of them to
    a list of arrays.  With ``output="panel"`` it returns ``MeasurePanel``
    objects instead.  Stateless: ``fit`` only validates parameters.
    """

    def __init__(self, registry="full", interval_secs=10, session=("09:30:00", "16:00:00"),
                 classifier="clnv", shares_normalizer="adtv", output="array"):
        self.registry = registry
        self.interval_secs = interval_secs
        self.session = session
        self.classifier = classifier
        self.shares_normalizer = shares_normalizer
        self.output = output

    def fit(self, X=None, y=None):
        session = _session_ns(self.session)
        self.interval_ns_ = check_interval(self.interval_secs, session)
        self.session_ns_ = session
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.shares_normalizer not in ("adtv", "adrv"):
            raise ValueError("shares_normalizer must be 'adtv' or 'adrv'")
        if self.output not in ("array", "panel"):
            raise ValueError("output must be 'array' or 'panel'")
        self.registry_ = resolve_registry(self.registry)
        self.measures_ = measure_names(self.registry_)
        return self

    def _one(self, day: SymbolDay):
        if not isinstance(day, SymbolDay):
            raise TypeError(f"expected SymbolDay, got {type(day).__name__}")
        panel = build_panel(day, self.registry_, session=self.session_ns_,
                            interval_ns=self.interval_ns_, classifier=self.classifier,
                            shares_normalizer=self.shares_normalizer)
        return panel if self.output == "panel" else panel.values

    def transform(self, X):
        check_is_fitted(self, "registry_")
        if isinstance(X, SymbolDay):
            return self._one(X)
        return [self._one(day) for day in X]

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "measures_")
        return np.asarray(self.measures_, dtype=object)
