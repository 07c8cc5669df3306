"""Deterministic SVG rendering of embeddings and batch summaries."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .graph import Graph
from .hardware import RegisterProfile
from .lattice import TrapLattice

SVG_NS = "http://www.w3.org/2000/svg"
PAD = 20.0


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _svg(width: float, height: float) -> ET.Element:
    return ET.Element(
        "svg",
        {"xmlns": SVG_NS, "width": _fmt(width), "height": _fmt(height), "viewBox": f"0 0 {_fmt(width)} {_fmt(height)}"},
    )


def _text(parent: ET.Element, x: float, y: float, label: str, **attrs) -> None:
    el = ET.SubElement(parent, "text", {"x": _fmt(x), "y": _fmt(y), "font-size": "10", **attrs})
    el.text = label


def _serialize(root: ET.Element) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def embedding_svg(
    coords: np.ndarray,
    g: Graph,
    profile: RegisterProfile,
    lattice: TrapLattice | None = None,
    scale: float = 8.0,
    title: str | None = None,
) -> str:
    """Vertices, edges and the ``r_b / 2`` disks (touching disks mean an edge)."""
    p = np.asarray(coords, dtype=float).reshape(-1, 2)
    pts = [p]
    if lattice is not None:
        pts.append(lattice.traps)
    allp = np.vstack(pts) if sum(len(a) for a in pts) else np.zeros((1, 2))
    lo = allp.min(axis=0) - profile.r_b / 2
    hi = allp.max(axis=0) + profile.r_b / 2
    w, h = (hi - lo) * scale + 2 * PAD

    def xy(q):
        # flip y so up is up
        return PAD + (q[0] - lo[0]) * scale, PAD + (hi[1] - q[1]) * scale

    root = _svg(w, h)
    if title:
        _text(root, PAD, PAD * 0.7, title)
    if lattice is not None:
        traps = ET.SubElement(root, "g", {"class": "traps"})
        for t in lattice.traps:
            cx, cy = xy(t)
            ET.SubElement(traps, "circle", {"cx": _fmt(cx), "cy": _fmt(cy), "r": "1.500", "fill": "#999"})
    disks = ET.SubElement(root, "g", {"class": "disks"})
    for q in p:
        cx, cy = xy(q)
        ET.SubElement(
            disks,
            "circle",
            {"cx": _fmt(cx), "cy": _fmt(cy), "r": _fmt(profile.r_b / 2 * scale), "fill": "#4a90d9", "fill-opacity": "0.15", "stroke": "#4a90d9"},
        )
    edges = ET.SubElement(root, "g", {"class": "edges"})
    for i, j in g.sorted_edges:
        (x1, y1), (x2, y2) = xy(p[i]), xy(p[j])
        ET.SubElement(edges, "line", {"x1": _fmt(x1), "y1": _fmt(y1), "x2": _fmt(x2), "y2": _fmt(y2), "stroke": "#333"})
    verts = ET.SubElement(root, "g", {"class": "vertices"})
    for v, q in enumerate(p):
        cx, cy = xy(q)
        ET.SubElement(verts, "circle", {"cx": _fmt(cx), "cy": _fmt(cy), "r": "3.000", "fill": "#c0392b"})
        _text(verts, cx + 4, cy - 4, str(v))
    return _serialize(root)


def success_bar_svg(success_by_n: dict[int, tuple[int, int]], width: float = 480, height: float = 240) -> str:
    """Bars of feasible samples per vertex count, with the sample total as a label."""
    root = _svg(width, height)
    items = sorted(success_by_n.items())
    top = max((t for _, (_, t) in items), default=1) or 1
    plot_w, plot_h = width - 2 * PAD, height - 3 * PAD
    bw = plot_w / max(len(items), 1)
    bars = ET.SubElement(root, "g", {"class": "bars"})
    for k, (n, (ok, total)) in enumerate(items):
        x = PAD + k * bw
        bh = plot_h * ok / top
        ET.SubElement(
            bars, "rect", {"x": _fmt(x + 0.1 * bw), "y": _fmt(PAD + plot_h - bh), "width": _fmt(0.8 * bw), "height": _fmt(bh), "fill": "#4a90d9"}
        )
        _text(bars, x + 0.5 * bw, PAD + plot_h + 12, str(n), **{"text-anchor": "middle"})
        _text(bars, x + 0.5 * bw, PAD + plot_h - bh - 3, f"{ok}/{total}", **{"text-anchor": "middle"})
    return _serialize(root)


def gap_box_svg(gap_by_n: dict[int, dict], width: float = 480, height: float = 240) -> str:
    """Box per vertex count from min/q1/median/q3/max summaries."""
    root = _svg(width, height)
    items = [(n, s) for n, s in sorted(gap_by_n.items()) if s.get("count", 0)]
    vals = [s[k] for _, s in items for k in ("min", "max")]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi <= lo:
        hi = lo + 1.0
    plot_w, plot_h = width - 2 * PAD, height - 3 * PAD

    def y(v):
        return PAD + plot_h * (hi - v) / (hi - lo)

    bw = plot_w / max(len(items), 1)
    boxes = ET.SubElement(root, "g", {"class": "boxes"})
    for k, (n, s) in enumerate(items):
        cx = PAD + (k + 0.5) * bw
        ET.SubElement(boxes, "line", {"x1": _fmt(cx), "y1": _fmt(y(s["min"])), "x2": _fmt(cx), "y2": _fmt(y(s["max"])), "stroke": "#333"})
        ET.SubElement(
            boxes,
            "rect",
            {"x": _fmt(cx - 0.3 * bw), "y": _fmt(y(s["q3"])), "width": _fmt(0.6 * bw), "height": _fmt(y(s["q1"]) - y(s["q3"])), "fill": "#f5cba7", "stroke": "#333"},
        )
        ET.SubElement(
            boxes, "line", {"x1": _fmt(cx - 0.3 * bw), "y1": _fmt(y(s["median"])), "x2": _fmt(cx + 0.3 * bw), "y2": _fmt(y(s["median"])), "stroke": "#c0392b"}
        )
        _text(boxes, cx, PAD + plot_h + 12, str(n), **{"text-anchor": "middle"})
    _text(root, 2, y(hi) + 4, f"{hi:.2f}")
    _text(root, 2, y(lo), f"{lo:.2f}")
    return _serialize(root)
