"""Exhaustive minimax-linkage clustering, for cross-checking the fast version.

Every step rescans all cluster pairs and recomputes ``r(G u H)`` from the raw
distances with plain loops.  Only meant for small inputs.
"""
from __future__ import annotations

import math

import numpy as np

from .minimax import Node, PrototypeDendrogram, _as_array

MAX_ORACLE_SIZE = 12


def _radius(points, d):
    best, proto = math.inf, None
    for x in sorted(points):
        worst = 0.0
        for y in points:
            if d[x][y] > worst:
                worst = d[x][y]
        if worst < best:
            best, proto = worst, x
    return best, proto


def oracle_minimax(D) -> PrototypeDendrogram:
    d_arr, ids = _as_array(D)
    n = len(d_arr)
    if n > MAX_ORACLE_SIZE:
        raise ValueError(f"oracle refuses n={n} > {MAX_ORACLE_SIZE}")
    if np.isnan(d_arr).any():
        raise ValueError("oracle needs a complete matrix")
    d = d_arr.tolist()
    nodes = [Node(i, (i,), 0.0, i) for i in range(n)]
    clusters = {i: (frozenset([i]), i) for i in range(n)}  # key: smallest member
    while len(clusters) > 1:
        best = None
        keys = sorted(clusters)
        for i, g in enumerate(keys):
            for h in keys[i + 1:]:
                union = clusters[g][0] | clusters[h][0]
                r, proto = _radius(union, d)
                if best is None or r < best[0]:
                    best = (r, proto, g, h)
        r, proto, g, h = best
        union = clusters[g][0] | clusters[h][0]
        node = Node(len(nodes), tuple(sorted(union)), r, proto,
                    (clusters[g][1], clusters[h][1]))
        nodes.append(node)
        del clusters[h]
        clusters[g] = (union, node.id)
    return PrototypeDendrogram(ids, nodes)
