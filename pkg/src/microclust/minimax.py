"""Agglomerative clustering with minimax linkage and cluster prototypes.

For a cluster C, ``dmax(x, C)`` is the largest distance from x to a member
of C; the minimax radius ``r(C)`` is the smallest ``dmax`` over members and the
member achieving it is the prototype.  Two clusters G, H are linked at
``r(G u H)``.  Each step merges the pair with the smallest linkage, so merge
heights never decrease up the tree.

Ties are broken on leaf indices: the prototype is the lowest-index minimizer,
and among equally close pairs the one whose (smallest member, smallest member)
pair is lexicographically first is merged.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distance import DistanceMatrix


@dataclass(frozen=True)
class Node:
    id: int
    members: tuple[int, ...]
    height: float
    prototype: int
    children: tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


class Cluster(NamedTuple):
    members: tuple[str, ...]
    prototype: str


class PrototypeDendrogram:
    """Binary merge tree: leaves ``0..n-1``, merge ``k`` creates node ``n+k``."""

    def __init__(self, labels, nodes):
        self.labels = tuple(labels)
        self.nodes = list(nodes)
        n = len(self.labels)
        if n == 0:
            raise ValueError("empty tree")
        if len(self.nodes) != 2 * n - 1:
            raise ValueError(f"{n} leaves need {2 * n - 1} nodes, got {len(self.nodes)}")

    @property
    def n_leaves(self) -> int:
        return len(self.labels)

    @property
    def root(self) -> Node:
        return self.nodes[-1]

    @property
    def merges(self) -> list[Node]:
        return self.nodes[self.n_leaves:]

    def label(self, idx: int) -> str:
        return self.labels[idx]

    def leaf_order(self) -> list[int]:
        order, stack = [], [self.root.id]
        while stack:
            node = self.nodes[stack.pop()]
            if node.is_leaf:
                order.append(node.id)
            else:
                stack.extend(reversed(node.children))
        return order

    def parents(self) -> dict[int, int]:
        return {c: node.id for node in self.merges for c in node.children}

    def to_linkage(self) -> np.ndarray:
        """scipy-style ``(n-1, 4)`` linkage matrix (children, height, size)."""
        return np.array([[*node.children, node.height, len(node.members)]
                         for node in self.merges], dtype=float).reshape(-1, 4)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "nodes": [
                {
                    "id": node.id,
                    "members": [self.labels[m] for m in node.members],
                    "height": node.height,
                    "prototype": self.labels[node.prototype],
                    "children": list(node.children),
                }
                for node in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PrototypeDendrogram":
        labels = data["labels"]
        index = {name: i for i, name in enumerate(labels)}
        nodes = [
            Node(int(nd["id"]), tuple(sorted(index[m] for m in nd["members"])),
                 float(nd["height"]), index[nd["prototype"]],
                 tuple(int(c) for c in nd["children"]))
            for nd in data["nodes"]
        ]
        return cls(labels, nodes)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PrototypeDendrogram":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, PrototypeDendrogram):
            return NotImplemented
        return self.labels == other.labels and self.nodes == other.nodes

    def __repr__(self):
        return f"PrototypeDendrogram(n_leaves={self.n_leaves}, root_height={self.root.height!r})"


def _as_array(D) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(D, DistanceMatrix):
        return D.d, D.ids
    d = np.asarray(D, dtype=float)
    return d, tuple(str(i) for i in range(len(d)))


def minimax_radius(members, D) -> tuple[float, int]:
    """Minimax radius of ``members`` (leaf indices) and its prototype."""
    d, _ = _as_array(D)
    members = np.sort(np.asarray(list(members), dtype=int))
    if not len(members):
        raise ValueError("empty cluster")
    sub = d[np.ix_(members, members)]
    if np.isnan(sub).any():
        raise ValueError("undefined distance inside cluster")
    dmax = sub.max(axis=1)
    best = int(np.argmin(dmax))
    return float(dmax[best]), int(members[best])


def _check_complete(d: np.ndarray, ids):
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    bad = np.argwhere(np.triu(np.isnan(d), 1))
    if len(bad):
        pairs = ", ".join(f"({ids[i]}, {ids[j]})" for i, j in bad[:10])
        more = f" and {len(bad) - 10} more" if len(bad) > 10 else ""
        raise ValueError(f"distance matrix has undefined pairs: {pairs}{more}")


def minimax_linkage_cluster(D) -> PrototypeDendrogram:
    """Build the minimax-linkage tree of a complete distance matrix.

    Keeps ``M[x, c] = dmax(x, cluster c)`` for every point and live cluster, so
    the linkage of the new cluster with every other one is a masked column
    minimum.  Cluster slots are named by their smallest member, which makes
    the flattened-argmin tie-break the lexicographic rule above.
    """
    d, ids = _as_array(D)
    _check_complete(d, ids)
    n = len(d)
    nodes = [Node(i, (i,), 0.0, i) for i in range(n)]
    if n == 1:
        return PrototypeDendrogram(ids, nodes)

    member = np.eye(n, dtype=bool)            # member[x, slot]
    M = d.copy()                              # M[x, slot] = dmax(x, cluster(slot))
    node_of = list(range(n))
    live = np.ones(n, dtype=bool)

    # pair linkage R[a, b] (a < b) and its prototype; singletons first
    R = np.full((n, n), np.inf)
    P = np.zeros((n, n), dtype=int)
    iu = np.triu_indices(n, 1)
    R[iu] = d[iu]
    P[iu] = iu[0]  # tie between two points: lower index

    for _ in range(n - 1):
        flat = int(np.argmin(R))
        a, b = divmod(flat, n)
        height, proto = float(R[a, b]), int(P[a, b])
        new_members = member[:, a] | member[:, b]
        members = tuple(np.flatnonzero(new_members).tolist())
        node = Node(len(nodes), members, height, proto, (node_of[a], node_of[b]))
        nodes.append(node)

        member[:, a] = new_members
        M[:, a] = np.maximum(M[:, a], M[:, b])
        live[b] = False
        member[:, b] = False
        R[b, :] = np.inf
        R[:, b] = np.inf
        node_of[a] = node.id

        others = np.flatnonzero(live)
        others = others[others != a]
        if not len(others):
            break
        # r(new u K) for each other live K: min over x in new u K of max(M[x,new], M[x,K])
        cand = np.maximum(M[:, a][:, None], M[:, others])
        inside = new_members[:, None] | member[:, others]
        cand = np.where(inside, cand, np.inf)
        rows = np.argmin(cand, axis=0)
        radii = cand[rows, np.arange(len(others))]
        lo = np.minimum(others, a)
        hi = np.maximum(others, a)
        R[lo, hi] = radii
        P[lo, hi] = rows
    return PrototypeDendrogram(ids, nodes)


def cut_at_height(tree: PrototypeDendrogram, h: float) -> list[Cluster]:
    """Maximal subtrees whose merge heights are all below ``h``.

    Leaves are always clusters of their own.  Clusters come back ordered by
    their smallest member index.
    """
    if h < 0:
        raise ValueError("cut height must be non-negative")
    found = []
    stack = [tree.root.id]
    while stack:
        node = tree.nodes[stack.pop()]
        if node.is_leaf or node.height < h:
            found.append(node)
        else:
            stack.extend(node.children)
    found.sort(key=lambda nd: nd.members[0])
    return [Cluster(tuple(tree.label(m) for m in nd.members), tree.label(nd.prototype))
            for nd in found]


def cut_to_n_clusters(tree: PrototypeDendrogram, n_clusters: int) -> list[Cluster]:
    """Undo the last ``n_clusters - 1`` merges."""
    if not 1 <= n_clusters <= tree.n_leaves:
        raise ValueError(f"n_clusters must be in [1, {tree.n_leaves}]")
    keep_below = tree.n_leaves + (tree.n_leaves - n_clusters)  # node ids < this are kept
    found = []
    stack = [tree.root.id]
    while stack:
        node = tree.nodes[stack.pop()]
        if node.id < keep_below:
            found.append(node)
        else:
            stack.extend(node.children)
    found.sort(key=lambda nd: nd.members[0])
    return [Cluster(tuple(tree.label(m) for m in nd.members), tree.label(nd.prototype))
            for nd in found]


def inversions(tree: PrototypeDendrogram) -> list[tuple[int, int]]:
    """(parent, child) pairs where the parent sits below the child."""
    return [(node.id, c) for node in tree.merges for c in node.children
            if node.height < tree.nodes[c].height]


def labels_from_clusters(tree: PrototypeDendrogram, clusters) -> np.ndarray:
    index = {name: i for i, name in enumerate(tree.labels)}
    labels = np.empty(tree.n_leaves, dtype=int)
    for k, cl in enumerate(clusters):
        labels[[index[m] for m in cl.members]] = k
    return labels
