import sys
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import numpy as np
from parameterized import parameterized

from bawutils.plots import plot_curves, plot_points


class PlotTest(TestCase):
    def setUp(self):
        """common test setup"""
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.directory = Path(directory.name)
        self.x = np.linspace(1e6, 2e6, 51)

    @parameterized.expand([("linear", False), ("log", True)])
    def test_curves_are_svg(self, _name, log_y):
        """GIVEN two series WHEN they are plotted THEN an SVG file is written at the requested path"""
        path = plot_curves(
            self.directory / "curves.svg", self.x, {"a": self.x**2, "b": self.x**3}, "f [Hz]", "value", log_y
        )
        self.assertEqual(path, self.directory / "curves.svg")
        self.assertIn("<svg", path.read_text(encoding="utf-8"))

    def test_reruns_are_byte_identical(self):
        """GIVEN the same data WHEN curves and points are plotted twice THEN the SVG bytes are identical"""

        def render():
            curves = plot_curves(self.directory / "curves.svg", self.x, {"q": self.x}, "f [Hz]", "Q").read_bytes()
            groups = {"open S1": [[1.0, 2.0], [2.0, 3.0]], "short A1": [[1.5, 1.0]]}
            points = plot_points(self.directory / "points.svg", groups, "kx [1/m]", "f [Hz]").read_bytes()
            return curves, points

        self.assertEqual(render(), render())

    @parameterized.expand([("curves", "curves"), ("points", "points")])
    def test_without_matplotlib(self, _name, kind):
        """GIVEN matplotlib cannot be imported WHEN a plot is requested THEN nothing is written and None is returned"""
        path = self.directory / "skipped.svg"
        with mock.patch.dict(sys.modules, {"matplotlib": None}):
            with self.assertLogs("bawutils.plots", level="WARNING"):
                if kind == "curves":
                    result = plot_curves(path, self.x, {"q": self.x}, "f [Hz]", "Q")
                else:
                    result = plot_points(path, {"open S1": [[1.0, 2.0]]}, "kx [1/m]", "f [Hz]")
        self.assertIsNone(result)
        self.assertFalse(path.exists())
