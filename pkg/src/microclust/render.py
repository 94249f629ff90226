"""Dendrogram output: SVG drawing, JSON and Newick text."""
from __future__ import annotations

import re
from html import escape
from pathlib import Path

from ._fmt import fmt_float
from .minimax import PrototypeDendrogram

_NEWICK_UNSAFE = re.compile(r"[\s(),:;\[\]']")


def _newick_label(name: str) -> str:
    if _NEWICK_UNSAFE.search(name):
        return "'" + name.replace("'", "''") + "'"
    return name


def to_newick(tree: PrototypeDendrogram) -> str:
    """Internal nodes are labelled with their prototype and carry their merge
    height as branch length, e.g. ``((A,B)A:1.0,C)B:1.0;``."""

    def walk(idx):
        node = tree.nodes[idx]
        if node.is_leaf:
            return _newick_label(tree.label(idx))
        inner = ",".join(walk(c) for c in node.children)
        return f"({inner}){_newick_label(tree.label(node.prototype))}:{fmt_float(node.height)}"

    return walk(tree.root.id) + ";"


# layout constants, in px
_ROW = 16
_LABEL_W = 260
_PLOT_W = 520
_TOP = 40
_BOTTOM = 40
_RIGHT = 30


def _fmt_px(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def to_svg(tree: PrototypeDendrogram, cut: float | None = None, title: str | None = None) -> str:
    """Horizontal dendrogram: leaves down the left, distance axis along x."""
    order = tree.leaf_order()
    xmax = max(1.0, tree.root.height)
    width = _LABEL_W + _PLOT_W + _RIGHT
    height = _TOP + _ROW * len(order) + _BOTTOM

    def xpos(h):
        return _LABEL_W + _PLOT_W * h / xmax

    ypos = {}
    for row, leaf in enumerate(order):
        ypos[leaf] = _TOP + _ROW * (row + 0.5)
    for node in tree.merges:
        ypos[node.id] = sum(ypos[c] for c in node.children) / len(node.children)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text class="title" x="{width / 2:g}" y="20" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    for leaf in order:
        out.append(f'<text class="leaf" x="{_LABEL_W - 6}" y="{_fmt_px(ypos[leaf] + 4)}" '
                   f'text-anchor="end">{escape(tree.label(leaf))}</text>')
    for node in tree.merges:
        px = xpos(node.height)
        (x1, y1), (x2, y2) = [(xpos(tree.nodes[c].height), ypos[c]) for c in node.children]
        d = (f"M{_fmt_px(x1)},{_fmt_px(y1)} H{_fmt_px(px)} V{_fmt_px(y2)} "
             f"H{_fmt_px(x2)}")
        out.append(f'<path class="junction" data-node="{node.id}" '
                   f'data-height="{fmt_float(node.height)}" '
                   f'data-prototype="{escape(tree.label(node.prototype))}" d="{d}" '
                   f'fill="none" stroke="black" stroke-width="1"/>')
    axis_y = _TOP + _ROW * len(order) + 8
    out.append(f'<line class="axis" x1="{_LABEL_W}" y1="{axis_y}" '
               f'x2="{_fmt_px(xpos(xmax))}" y2="{axis_y}" stroke="black"/>')
    for k in range(11):
        h = xmax * k / 10
        x = _fmt_px(xpos(h))
        out.append(f'<line x1="{x}" y1="{axis_y}" x2="{x}" y2="{axis_y + 4}" stroke="black"/>')
        if k % 2 == 0:
            out.append(f'<text class="tick" x="{x}" y="{axis_y + 16}" '
                       f'text-anchor="middle">{h:.1f}</text>')
    out.append(f'<text x="{_fmt_px(xpos(xmax / 2))}" y="{axis_y + 30}" '
               f'text-anchor="middle">distance</text>')
    if cut is not None:
        x = _fmt_px(xpos(min(cut, xmax)))
        out.append(f'<line class="cut" x1="{x}" y1="{_TOP - 8}" x2="{x}" y2="{axis_y}" '
                   f'stroke="red" stroke-dasharray="4,3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_dendrogram(tree: PrototypeDendrogram, path, fmt: str | None = None,
                      cut: float | None = None, title: str | None = None) -> Path:
    """Write ``tree`` as svg, json or newick (format inferred from the suffix)."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "svg":
        text = to_svg(tree, cut=cut, title=title)
    elif fmt == "json":
        text = tree.to_json()
    elif fmt in ("newick", "nwk"):
        text = to_newick(tree) + "\n"
    else:
        raise ValueError(f"unknown dendrogram format {fmt!r}")
    path.write_text(text, encoding="utf-8")
    return path
