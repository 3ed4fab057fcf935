"""Standalone SVG scatter of original vs. transformed points around the unit circle."""
from __future__ import annotations

import xml.etree.ElementTree as ET

SIZE = 600
EXTENT = 2.0  # data coordinates shown: [-EXTENT, EXTENT] on both axes
COLORS = {"original": "#1f5fbf", "transformed": "#d62728"}


class PlotError(ValueError):
    pass


def _px(v: float) -> float:
    return (v + EXTENT) / (2 * EXTENT) * SIZE


def scatter_rows(report: dict) -> list:
    if not isinstance(report, dict) or "scatter" not in report:
        raise PlotError("report has no scatter data")
    rows = []
    for i, r in enumerate(report["scatter"]):
        try:
            x, y, tag = float(r[0]), float(r[1]), str(r[2])
        except (TypeError, ValueError, IndexError) as e:
            raise PlotError(f"malformed scatter row {i}: {r!r}") from e
        if tag not in COLORS:
            raise PlotError(f"scatter row {i} has unknown tag {tag!r}")
        rows.append((x, y, tag))
    return rows


def scatter_svg(rows) -> str:
    """One circle element per row, in class ``point``. Points outside the
    viewport are clamped to its edge so the count always matches."""
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(SIZE), height=str(SIZE),
                     viewBox=f"0 0 {SIZE} {SIZE}")
    ET.SubElement(svg, "rect", width=str(SIZE), height=str(SIZE), fill="white")
    c = _px(0.0)
    ET.SubElement(svg, "circle", cx=f"{c:g}", cy=f"{c:g}", r=f"{_px(1.0) - c:g}", fill="none",
                  stroke="black", **{"stroke-width": "1.5", "class": "boundary"})
    for x, y, tag in rows:
        px = min(max(_px(x), 0.0), SIZE)
        py = min(max(SIZE - _px(y), 0.0), SIZE)
        ET.SubElement(svg, "circle", cx=f"{px:.3f}", cy=f"{py:.3f}", r="2.5", fill=COLORS[tag],
                      **{"fill-opacity": "0.7", "class": f"point {tag}"})
    legend = ET.SubElement(svg, "g", **{"class": "legend"})
    for i, (tag, color) in enumerate(COLORS.items()):
        y = 20 + 20 * i
        ET.SubElement(legend, "rect", x="12", y=str(y - 9), width="10", height="10", fill=color)
        ET.SubElement(legend, "text", x="28", y=str(y), **{"font-family": "sans-serif",
                                                          "font-size": "13"}).text = tag
    return ET.tostring(svg, encoding="unicode") + "\n"


def count_points(svg_text: str) -> int:
    root = ET.fromstring(svg_text)
    return sum(1 for el in root.iter() if el.get("class", "").split()[:1] == ["point"])
