import re

import numpy as np
import pytest

from microclust.distance import DistanceMatrix
from microclust.minimax import PrototypeDendrogram, minimax_linkage_cluster
from microclust.render import render_dendrogram, to_newick, to_svg


def three_point_tree():
    return minimax_linkage_cluster(DistanceMatrix(("A", "B", "C"),
                                                  [[0, 1, 2], [1, 0, 1], [2, 1, 0]]))


def test_newick_three_points():
    # {A, B} ties at radius 1, so its prototype is the lower index A
    assert to_newick(three_point_tree()) == "((A,B)A:1.0,C)B:1.0;"


def test_newick_quotes_unsafe_labels():
    tree = minimax_linkage_cluster(DistanceMatrix(("a b", "c"), [[0, .5], [.5, 0]]))
    assert to_newick(tree) == "('a b',c)'a b':0.5;"


def test_svg_structure():
    svg = to_svg(three_point_tree(), cut=0.7, title="t")
    assert svg.count('class="leaf"') == 3
    assert svg.count('class="junction"') == 2
    assert svg.count('class="cut"') == 1
    for name in "ABC":
        assert f">{name}</text>" in svg


def test_svg_without_cut():
    assert 'class="cut"' not in to_svg(three_point_tree())


def test_svg_escapes_labels():
    tree = minimax_linkage_cluster(DistanceMatrix(("a<b", "c&d"), [[0, .5], [.5, 0]]))
    svg = to_svg(tree)
    assert "a&lt;b" in svg and "c&amp;d" in svg


def test_json_round_trip_gives_identical_svg(tmp_path):
    rng = np.random.default_rng(0)
    a = np.triu(rng.random((8, 8)), 1)
    tree = minimax_linkage_cluster(a + a.T)
    render_dendrogram(tree, tmp_path / "t.json")
    render_dendrogram(tree, tmp_path / "a.svg", cut=0.7)
    back = PrototypeDendrogram.from_json((tmp_path / "t.json").read_text())
    render_dendrogram(back, tmp_path / "b.svg", cut=0.7)
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_render_formats(tmp_path):
    tree = three_point_tree()
    assert render_dendrogram(tree, tmp_path / "x.nwk").read_text() == "((A,B)A:1.0,C)B:1.0;\n"
    render_dendrogram(tree, tmp_path / "x.txt", fmt="newick")
    assert (tmp_path / "x.txt").read_text().endswith(";\n")
    with pytest.raises(ValueError):
        render_dendrogram(tree, tmp_path / "x.png")


def test_heights_on_unit_axis():
    svg = to_svg(three_point_tree())
    heights = [float(h) for h in re.findall(r'data-height="([^"]+)"', svg)]
    assert heights == [1.0, 1.0]
    assert ">1.0</text>" in svg and ">0.0</text>" in svg
