import sys
import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.analysis import Field
from app.core.config import ConfigTree, parse_config, parse_config_string
from app.core.errors import ConfigError, ValidationError
from app.core.output import (
    checkpoint_path,
    colorize,
    dump_name,
    read_csv,
    read_vti,
    write_csv,
    write_ppm_heatmap,
    write_vti,
)


class TempDirTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class TestFileNames(unittest.TestCase):

    def test_dump_name(self):
        """Step numbers are zero padded to eight digits"""
        self.assertEqual(dump_name("poiseuille2d", 300, "vti"), "poiseuille2d_iT00000300.vti")
        self.assertEqual(checkpoint_path("out", "cavity2d", 12).name, "cavity2d_iT00000012.chk")


class TestVti(TempDirTestCase):

    def test_round_trip(self):
        """Scalar and vector fields survive a write/read cycle exactly"""
        rng = np.random.default_rng(2)
        pressure = Field(rng.random((3, 4)))
        velocity = Field(rng.random((2, 3, 4)))
        path = write_vti({"physPressure": pressure, "physVelocity": velocity},
                         self.tmp / "state.vti", origin=(0.5, -0.25), delta_x=0.1)
        fields, shape = read_vti(path)
        self.assertEqual(shape, (3, 4))
        np.testing.assert_array_equal(fields["physPressure"].data, pressure.data)
        np.testing.assert_array_equal(fields["physVelocity"].data, velocity.data)
        self.assertEqual(fields["physVelocity"].origin, (0.5, -0.25))
        self.assertEqual(fields["physVelocity"].delta_x, 0.1)

    def test_point_order(self):
        """Points are written x fastest with interleaved components"""
        data = np.array([[[1.0, 2.0], [3.0, 4.0]], [[5.0, 6.0], [7.0, 8.0]]])
        path = write_vti({"u": Field(data)}, self.tmp / "order.vti")
        text = path.read_text()
        self.assertIn("1 5 3 7 2 6 4 8", text)
        self.assertIn('WholeExtent="0 1 0 1 0 0"', text)

    def test_deterministic(self):
        """Same input, same bytes"""
        field = {"rho": Field(np.linspace(0.0, 1.0, 6).reshape(2, 3))}
        a = write_vti(field, self.tmp / "a.vti").read_bytes()
        b = write_vti(field, self.tmp / "b.vti").read_bytes()
        self.assertEqual(a, b)

    def test_inconsistent_shapes(self):
        """All fields of one file share the grid"""
        with self.assertRaises(ValidationError):
            write_vti({"a": Field(np.zeros((2, 2))), "b": Field(np.zeros((3, 2)))},
                      self.tmp / "bad.vti")
        with self.assertRaises(ValidationError):
            write_vti({}, self.tmp / "empty.vti")


class TestCsv(TempDirTestCase):

    def test_write_and_read(self):
        """Floats keep 16 significant digits, ints stay ints"""
        path = write_csv([[50, 1.0 / 3.0, True], [100, 0.1, False]],
                         ["N", "error", "converged"], self.tmp / "table.csv")
        header, rows = read_csv(path)
        self.assertEqual(header, ["N", "error", "converged"])
        self.assertEqual(rows[0], ["50", "0.3333333333333333", "True"])
        self.assertEqual(rows[1], ["100", "0.1", "False"])

    def test_row_length(self):
        """Rows must match the header"""
        with self.assertRaises(ValidationError):
            write_csv([[1, 2]], ["only"], self.tmp / "bad.csv")


class TestHeatmap(TempDirTestCase):

    def test_two_pixel_grey(self):
        """[0, 1] on a 2x1 grid is one black and one white pixel"""
        path = write_ppm_heatmap(np.array([[0.0], [1.0]]), self.tmp / "map.ppm")
        self.assertEqual(path.read_bytes(),
                         b"P6\n2 1\n255\n" + bytes([0, 0, 0, 255, 255, 255]))

    def test_top_row_is_largest_y(self):
        """Image rows run from the top of the domain down"""
        path = write_ppm_heatmap(Field(np.array([[0.0, 1.0]])), self.tmp / "column.ppm")
        self.assertEqual(path.read_bytes(),
                         b"P6\n1 2\n255\n" + bytes([255, 255, 255, 0, 0, 0]))

    def test_colormaps(self):
        """Rainbow midpoint is green, a flat field maps to the middle"""
        rgb = colorize(np.array([0.0, 0.5, 1.0]), "rainbow")
        np.testing.assert_array_equal(rgb[1], [0, 255, 0])
        np.testing.assert_array_equal(rgb[0], [0, 0, 255])
        flat = colorize(np.ones(3), "grey")
        np.testing.assert_array_equal(flat[:, 0], [128, 128, 128])
        clipped = colorize(np.array([-1.0, 2.0]), "grey", vmin=0.0, vmax=1.0)
        np.testing.assert_array_equal(clipped[:, 0], [0, 255])

    def test_invalid(self):
        """Unknown colormaps and vector data are rejected"""
        with self.assertRaises(ValidationError):
            colorize(np.zeros(2), "viridis")
        with self.assertRaises(ValidationError):
            write_ppm_heatmap(np.zeros((2, 2, 2)), self.tmp / "bad.ppm")


class TestConfig(TempDirTestCase):

    TEXT = (
        "# discretization\n"
        "[Application.Discretization]\n"
        "Resolution = 50\n"
        "LatticeRelaxationTime = 0.8\n"
        "\n"
        "[Output]\n"
        "OutputDir = ./tmp # not a comment\n"
        "Resolutions = 50, 100 200\n"
        "Verbose = yes\n"
    )

    def test_dotted_keys(self):
        """Sections prefix their keys"""
        tree = parse_config_string(self.TEXT)
        self.assertEqual(tree.get_int("Application.Discretization.Resolution"), 50)
        self.assertEqual(tree.get_float("Application.Discretization.LatticeRelaxationTime"), 0.8)
        self.assertEqual(tree.get_str("Output.OutputDir"), "./tmp # not a comment")
        self.assertEqual(tree.get_list("Output.Resolutions", item_type=int), [50, 100, 200])
        self.assertTrue(tree.get_bool("Output.Verbose"))
        self.assertEqual(tree.warnings, [])

    def test_root_keys(self):
        """Keys before the first section have no prefix"""
        tree = parse_config_string("Name = run1\n[A]\nB = 2\n")
        self.assertEqual(tree.as_dict(), {"Name": "run1", "A.B": "2"})

    def test_read_or_warn(self):
        """Missing keys return the default and record a warning"""
        tree = parse_config_string(self.TEXT)
        self.assertEqual(tree.get_float("Application.PhysParameters.PhysMaxTime", 16.0), 16.0)
        self.assertEqual(len(tree.warnings), 1)
        self.assertIn("PhysMaxTime", tree.warnings[0])

    def test_type_errors(self):
        """Values that do not parse as the requested type raise"""
        tree = ConfigTree({"a": "2.5", "b": "maybe", "c": "1, x"})
        with self.assertRaises(ConfigError):
            tree.get_int("a")
        with self.assertRaises(ConfigError):
            tree.get_bool("b")
        with self.assertRaises(ConfigError):
            tree.get_list("c")
        with self.assertRaises(ConfigError):
            tree.get_float("b")

    def test_malformed_line_number(self):
        """Parse errors carry the line number of the offending line"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config_string("[Application]\nResolution = 10\ngarbage\n")
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn("line 3", str(ctx.exception))

    def test_duplicate_key_line_number(self):
        """Duplicate keys point at the repeated line"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config_string("[A]\nx = 1\nx = 2\n")
        self.assertEqual(ctx.exception.line, 3)

    def test_duplicate_across_sections(self):
        """[A] B.c and [A.B] c name the same key"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config_string("[Application]\nDiscretization.Resolution = 10\n"
                                "[Application.Discretization]\nResolution = 20\n")
        self.assertEqual(ctx.exception.line, 4)
        self.assertIn("Application.Discretization.Resolution", str(ctx.exception))
        with self.assertRaises(ConfigError) as ctx:
            parse_config_string("A.B = 1\n[A]\nB = 2\n")
        self.assertEqual(ctx.exception.line, 3)

    def test_overlay(self):
        """The overlaid tree wins"""
        base = ConfigTree({"A.x": "1", "A.y": "2"})
        merged = base.overlay(ConfigTree({"A.y": "3"}))
        self.assertEqual(merged.as_dict(), {"A.x": "1", "A.y": "3"})
        self.assertEqual(base["A.y"], "2")

    def test_serialize_parses_back(self):
        """serialize produces the flat format"""
        tree = parse_config_string(self.TEXT)
        again = parse_config_string(tree.serialize())
        self.assertEqual(again.as_dict(), tree.as_dict())

    def test_file(self):
        """parse_config reads files and reports missing ones"""
        path = self.tmp / "case.conf"
        path.write_text(self.TEXT, encoding="utf-8")
        self.assertEqual(len(parse_config(path)), 5)
        with self.assertRaises(ConfigError):
            parse_config(self.tmp / "missing.conf")

    def test_invalid_key(self):
        """Empty key parts are rejected"""
        with self.assertRaises(ConfigError):
            ConfigTree().set("A..b", 1)


if __name__ == '__main__':
    unittest.main()
