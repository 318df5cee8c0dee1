"""SVG rendering of solution documents.

One square panel per base solution (or per direct solution), the heavy
bodies drawn as filled circles and the small-mass positions as open circles.
All panels share the same axis range: the union of the plotted coordinates
padded by ten percent.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .document import SolutionDocument

__all__ = ["render_svg"]

_PANEL = 240.0
_MARGIN = 16.0
_SVG_NS = "http://www.w3.org/2000/svg"


def _panel_data(doc: SolutionDocument) -> list[tuple[str, list, list]]:
    """(label, filled points, open points) per panel."""
    base = doc.entries("base")
    panels = []
    if base:
        refined = doc.entries("refined") + doc.entries("restricted")
        for entry in base:
            k = entry.index[0]
            small = [
                e.coordinates[-1] for e in refined if e.index and e.index[0] == k
            ]
            panels.append((f"k={k}", entry.coordinates, small))
    else:
        for entry in doc.entries("direct"):
            coords = entry.coordinates
            panels.append((f"m={entry.index[0]}", coords[:-1], coords[-1:]))
    if not panels:
        raise ValueError("document contains nothing to plot")
    return panels


def render_svg(doc: SolutionDocument) -> str:
    panels = _panel_data(doc)
    points = [p for _, filled, open_ in panels for p in filled + open_]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
    pad = 0.1 * span
    half = span / 2 + pad
    cx = (max(xs) + min(xs)) / 2
    cy = (max(ys) + min(ys)) / 2

    cols = math.ceil(math.sqrt(len(panels)))
    rows = math.ceil(len(panels) / cols)
    width = cols * (_PANEL + _MARGIN) + _MARGIN
    height = rows * (_PANEL + _MARGIN) + _MARGIN

    root = ET.Element(
        "svg",
        {
            "xmlns": _SVG_NS,
            "version": "1.1",
            "width": f"{width:.0f}",
            "height": f"{height:.0f}",
            "viewBox": f"0 0 {width:.0f} {height:.0f}",
        },
    )

    def to_px(p) -> tuple[float, float]:
        u = (p[0] - (cx - half)) / (2 * half)
        v = (p[1] - (cy - half)) / (2 * half)
        return u * _PANEL, (1.0 - v) * _PANEL

    for idx, (label, filled, open_) in enumerate(panels):
        ox = _MARGIN + (idx % cols) * (_PANEL + _MARGIN)
        oy = _MARGIN + (idx // cols) * (_PANEL + _MARGIN)
        g = ET.SubElement(
            root, "g", {"class": "panel", "transform": f"translate({ox:.1f},{oy:.1f})"}
        )
        ET.SubElement(
            g,
            "rect",
            {
                "width": f"{_PANEL:.0f}",
                "height": f"{_PANEL:.0f}",
                "fill": "white",
                "stroke": "#888",
            },
        )
        ET.SubElement(
            g, "text", {"x": "6", "y": "16", "font-size": "12", "fill": "#333"}
        ).text = label
        for p in filled:
            x, y = to_px(p)
            ET.SubElement(
                g,
                "circle",
                {"cx": f"{x:.2f}", "cy": f"{y:.2f}", "r": "4", "fill": "black"},
            )
        for p in open_:
            x, y = to_px(p)
            ET.SubElement(
                g,
                "circle",
                {
                    "cx": f"{x:.2f}",
                    "cy": f"{y:.2f}",
                    "r": "2.5",
                    "fill": "none",
                    "stroke": "black",
                },
            )
    return ET.tostring(root, encoding="unicode", xml_declaration=True)
