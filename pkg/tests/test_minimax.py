import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microclust.distance import DistanceMatrix
from microclust.minimax import (PrototypeDendrogram, cut_at_height, cut_to_n_clusters,
                                inversions, labels_from_clusters, minimax_linkage_cluster,
                                minimax_radius)
from microclust.oracle import MAX_ORACLE_SIZE, oracle_minimax


def three_points():
    d = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    return DistanceMatrix(("A", "B", "C"), d)


def random_matrix(rng, n, grid=None):
    a = rng.random((n, n))
    if grid:
        a = np.round(a * grid) / grid  # coarse values force ties
    d = np.triu(a, 1)
    return d + d.T


def test_singleton_radius():
    assert minimax_radius([0], np.zeros((1, 1))) == (0.0, 0)


def test_pair_radius_tie_goes_to_lower_index():
    assert minimax_radius([0, 1], [[0, 0.6], [0.6, 0]]) == (0.6, 0)


def test_radius_matches_exhaustive_scan():
    rng = np.random.default_rng(4)
    d = random_matrix(rng, 9)
    members = [1, 3, 4, 6, 8]
    best = min((max(d[x, y] for y in members), x) for x in members)
    assert minimax_radius(members, d) == (best[0], best[1])


def test_radius_rejects_undefined_and_empty():
    with pytest.raises(ValueError):
        minimax_radius([0, 1], [[0, np.nan], [np.nan, 0]])
    with pytest.raises(ValueError):
        minimax_radius([], np.zeros((1, 1)))


def test_three_point_example():
    tree = minimax_linkage_cluster(three_points())
    first, last = tree.merges
    assert first.members == (0, 1) and first.height == 1 and first.prototype == 0
    assert last.height == 1 and tree.label(last.prototype) == "B"


def test_three_point_all_merge_orders():
    # exhaustive: every possible first merge and its height
    d = three_points().d
    heights = {pair: minimax_radius(pair, d)[0] for pair in itertools.combinations(range(3), 2)}
    assert min(heights.values()) == 1
    assert sorted(p for p, h in heights.items() if h == 1) == [(0, 1), (1, 2)]
    assert minimax_radius([0, 1, 2], d) == (1.0, 1)


def test_single_point():
    tree = minimax_linkage_cluster(DistanceMatrix(("A",), [[0]]))
    assert tree.n_leaves == 1 and tree.merges == []
    assert cut_at_height(tree, 0.7) == [(("A",), "A")]


def test_two_point_oracle():
    tree = oracle_minimax([[0, 0.4], [0.4, 0]])
    assert tree.root.height == 0.4


def test_oracle_agrees_on_three_points():
    assert oracle_minimax(three_points()) == minimax_linkage_cluster(three_points())


def test_oracle_refuses_big_input():
    with pytest.raises(ValueError):
        oracle_minimax(np.zeros((MAX_ORACLE_SIZE + 1, MAX_ORACLE_SIZE + 1)))


def test_incomplete_matrix_lists_pairs():
    d = np.array([[0, np.nan, .1], [np.nan, 0, .2], [.1, .2, 0]])
    with pytest.raises(ValueError, match=r"\(a, b\)"):
        minimax_linkage_cluster(DistanceMatrix(("a", "b", "c"), d))


def test_hundred_random_8x8_match_oracle():
    rng = np.random.default_rng(8)
    for i in range(100):
        d = random_matrix(rng, 8, grid=5 if i % 2 else None)
        assert minimax_linkage_cluster(d) == oracle_minimax(d)


def test_cut_extremes():
    tree = minimax_linkage_cluster(three_points())
    assert cut_at_height(tree, 0) == [(("A",), "A"), (("B",), "B"), (("C",), "C")]
    assert cut_at_height(tree, 1.01) == [(("A", "B", "C"), "B")]
    with pytest.raises(ValueError):
        cut_at_height(tree, -0.1)


def test_cut_is_strictly_below():
    tree = minimax_linkage_cluster(three_points())
    assert len(cut_at_height(tree, 1.0)) == 3


def test_planted_two_blocks():
    d = np.full((6, 6), 0.9)
    d[:3, :3] = 0.1
    d[3:, 3:] = 0.1
    np.fill_diagonal(d, 0)
    clusters = cut_at_height(minimax_linkage_cluster(d), 0.7)
    assert [c.members for c in clusters] == [("0", "1", "2"), ("3", "4", "5")]


def test_cut_to_n_clusters():
    rng = np.random.default_rng(3)
    tree = minimax_linkage_cluster(random_matrix(rng, 7))
    for k in range(1, 8):
        cl = cut_to_n_clusters(tree, k)
        assert len(cl) == k
        labels = labels_from_clusters(tree, cl)
        assert sorted(set(labels.tolist())) == list(range(k))
    with pytest.raises(ValueError):
        cut_to_n_clusters(tree, 0)


def test_json_round_trip_and_linkage():
    rng = np.random.default_rng(5)
    tree = minimax_linkage_cluster(DistanceMatrix(list("abcde"), random_matrix(rng, 5)))
    back = PrototypeDendrogram.from_json(tree.to_json())
    assert back == tree
    Z = tree.to_linkage()
    assert Z.shape == (4, 4) and Z[-1, 3] == 5
    assert sorted(tree.leaf_order()) == list(range(5))


matrices = st.integers(2, 10).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.7, 1.0]) | st.floats(0, 1),
                         min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2)))


def build(n, vals):
    d = np.zeros((n, n))
    d[np.triu_indices(n, 1)] = vals
    return d + d.T


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_tree_invariants(m):
    d = build(*m)
    tree = minimax_linkage_cluster(d)
    assert inversions(tree) == []
    assert tree == oracle_minimax(d)
    for node in tree.merges:
        assert node.prototype in node.members
        assert minimax_radius(node.members, d) == (node.height, node.prototype)


@settings(max_examples=80, deadline=None)
@given(matrices, st.randoms(use_true_random=False), st.sampled_from([0.0, 0.3, 0.7, 1.01]))
def test_permutation_preserves_partition_when_distances_distinct(m, rnd, h):
    n, vals = m
    # distinct distances keep the merge order unambiguous
    vals = [v + 1e-6 * i for i, v in enumerate(vals)]
    d = build(n, vals)
    perm = list(range(n))
    rnd.shuffle(perm)
    ids = [f"m{i}" for i in range(n)]
    t1 = minimax_linkage_cluster(DistanceMatrix(ids, d))
    t2 = minimax_linkage_cluster(DistanceMatrix([ids[p] for p in perm], d[np.ix_(perm, perm)]))
    p1 = {frozenset(c.members) for c in cut_at_height(t1, h)}
    p2 = {frozenset(c.members) for c in cut_at_height(t2, h)}
    assert p1 == p2
