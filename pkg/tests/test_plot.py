import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from starmap.plot import PALETTE, PlotSpec, render_svg, viewport_map

NS = "{http://www.w3.org/2000/svg}"


def circles(svg):
    return ET.fromstring(svg.split("\n", 1)[1]).iter(f"{NS}circle")


class TestViewport:
    def test_two_point_corners(self):
        px = viewport_map(np.array([[0.0, 0.0], [1.0, 1.0]]), 800, 800)(
            np.array([[0.0, 0.0], [1.0, 1.0]]))
        np.testing.assert_allclose(px, [[40, 760], [760, 40]])

    def test_aspect_ratio_preserved(self):
        pts = np.array([[0.0, 0.0], [4.0, 1.0]])
        px = viewport_map(pts, 800, 800)(pts)
        dx, dy = px[1] - px[0]
        assert dx == pytest.approx(720) and dy == pytest.approx(-180)
        assert px[:, 1].mean() == pytest.approx(400)

    def test_single_point_centered(self):
        px = viewport_map(np.array([[3.0, -2.0]]), 640, 480)(np.array([[3.0, -2.0]]))
        np.testing.assert_allclose(px, [[320, 240]])


class TestRender:
    def test_one_point(self):
        svg = render_svg(np.array([[1.0, 2.0]]))
        (c,) = list(circles(svg))
        assert (float(c.get("cx")), float(c.get("cy"))) == (400.0, 400.0)

    def test_element_counts(self):
        g = np.random.default_rng(0)
        svg = render_svg(g.normal(size=(123, 2)), g.integers(0, 30, 123), g.normal(size=(9, 2)))
        assert len(list(circles(svg))) == 123
        assert svg.count("<polygon") == 9
        # stars are drawn after points
        assert svg.rindex("<circle") < svg.index("<polygon")

    def test_palette_cycles(self):
        labels = np.arange(25)
        svg = render_svg(np.random.default_rng(1).normal(size=(25, 2)), labels)
        fills = [c.get("fill") for c in circles(svg)]
        assert fills[:20] == list(PALETTE)
        assert fills[20:] == list(PALETTE[:5])

    def test_hide_stars(self):
        svg = render_svg(np.zeros((3, 2)) + np.arange(3)[:, None], None, np.ones((2, 2)),
                         PlotSpec(show_stars=False))
        assert "<polygon" not in svg

    def test_rejects_3d(self):
        with pytest.raises(ValueError, match="2-D"):
            render_svg(np.zeros((4, 3)))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            PlotSpec(width=0)

    def test_deterministic(self):
        Y = np.random.default_rng(2).normal(size=(50, 2))
        assert render_svg(Y, np.arange(50) % 3) == render_svg(Y, np.arange(50) % 3)
        assert re.search(r'width="800" height="800"', render_svg(Y))
