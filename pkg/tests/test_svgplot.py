import xml.etree.ElementTree as ET

import numpy as np

from kreinmat.svgplot import Panel, nice_ticks, render_svg

NS = "{http://www.w3.org/2000/svg}"


def _parse(text):
    return ET.fromstring(text)


def test_single_branch_one_zero():
    z = np.linspace(-1, 1, 41)
    p = Panel(title="scalar").line(z, 0.5 - z)
    p.scatter([0.5], [0.0], label="zero")
    root = _parse(render_svg([p]))
    assert len(root.findall(f"{NS}polyline")) == 1
    assert len(root.findall(f"{NS}circle[@class='marker-circle']")) == 1


def test_nan_splits_and_dash():
    x = np.arange(10.0)
    y = x.copy()
    y[4] = np.nan
    p = Panel().line(x, y, dashed=True)
    lines = _parse(render_svg([p])).findall(f"{NS}polyline")
    assert len(lines) == 2
    assert all(l.get("stroke-dasharray") for l in lines)
    pts = [len(l.get("points").split()) for l in lines]
    assert pts == [4, 5]


def test_markers_and_layout():
    p = Panel().scatter([0, 1], [0, 1], marker="cross").scatter([2], [2], marker="x")
    root = _parse(render_svg([p, Panel(), Panel()], ncols=2, panel_size=(100, 80)))
    assert root.get("width") == "200" and root.get("height") == "160"
    assert len(root.findall(f"{NS}path[@class='marker-cross']")) == 2
    assert len(root.findall(f"{NS}path[@class='marker-x']")) == 1


def test_coordinates_map_linearly():
    p = Panel(xlim=(0, 1), ylim=(0, 1)).line([0, 1], [0, 1])
    pts = _parse(render_svg([p], panel_size=(475, 365))).find(f"{NS}polyline").get("points")
    (x0, y0), (x1, y1) = [tuple(map(float, s.split(","))) for s in pts.split()]
    assert (x0, y0) == (60.0, 325.0) and (x1, y1) == (460.0, 25.0)


def test_deterministic():
    p = Panel(title="t").line(np.linspace(0, 1, 7), np.sin(np.arange(7.0)))
    assert render_svg([p]) == render_svg([p])


def test_nice_ticks():
    t = nice_ticks(-0.16, -0.08)
    assert np.allclose(np.diff(t), t[1] - t[0]) and t[0] >= -0.16 and t[-1] <= -0.08
    assert 3 <= t.size <= 6
    assert list(nice_ticks(0, 10)) == [0, 2.5, 5, 7.5, 10]
