import sys
import os
import math
import unittest

import numpy as np

# Add root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.analysis import (
    Field,
    ValueTracer,
    ade_analytic_1d,
    ade_analytic_2d,
    compute_eoc,
    error_norm,
    error_table,
    line_flux,
    poiseuille_profile,
    porous_plate_analytic,
    start_scale,
)
from app.core.errors import GeometryError, ValidationError


class TestProfiles(unittest.TestCase):

    def test_poiseuille_parabola(self):
        """Zero at the walls, u_max on the centerline, zero outside"""
        u = poiseuille_profile([0.0, 0.5, 1.0, 1.5], 2.0, 1.0)
        np.testing.assert_allclose(u, [0.0, 2.0, 0.0, 0.0], atol=1e-15)

    def test_porous_plate_limits(self):
        """Plate values hold for any Re and Re = 0 is linear"""
        y = np.array([0.0, 0.5, 1.0])
        ux, temperature = porous_plate_analytic(y, 1.0, 2.0, 1.0, 0.1, 1.0, -1.0)
        self.assertAlmostEqual(ux[0], 0.0)
        self.assertAlmostEqual(ux[-1], 0.1)
        self.assertAlmostEqual(temperature[0], 1.0)
        self.assertAlmostEqual(temperature[-1], 0.0)
        # injection pushes the profile towards the top plate
        self.assertLess(ux[1], 0.05)
        ux0, t0 = porous_plate_analytic(y, 1.0, 0.0, 1.0, 0.1, 1.0, -1.0)
        np.testing.assert_allclose(ux0, [0.0, 0.05, 0.1], atol=1e-15)
        np.testing.assert_allclose(t0, [1.0, 0.5, 0.0], atol=1e-15)

    def test_ade_initial_condition(self):
        """At t = 0 both ADE solutions are products of sines"""
        x = np.linspace(-1.0, 1.0, 9)
        np.testing.assert_allclose(ade_analytic_1d(x, 0.0, 10.0, 1.5), np.sin(np.pi * x))
        np.testing.assert_allclose(ade_analytic_2d(x, x, 0.0, (2.5, 2.5), 0.05),
                                   np.sin(np.pi * x) ** 2)

    def test_ade_decay(self):
        """Amplitude decays like exp(-mu pi^2 t) per dimension"""
        self.assertAlmostEqual(float(ade_analytic_1d(0.5, 0.1, 0.0, 1.5)),
                               math.exp(-1.5 * math.pi ** 2 * 0.1), places=14)
        self.assertAlmostEqual(float(ade_analytic_2d(0.5, 0.5, 0.1, (0.0, 0.0), 0.05)),
                               math.exp(-0.1 * math.pi ** 2 * 0.1), places=14)


class TestErrorNorms(unittest.TestCase):

    def setUp(self):
        self.ref = np.zeros((2, 2))
        self.ref[:] = 2.0
        self.sim = self.ref + 1.0

    def test_absolute_norms(self):
        """Unit error on four cells of size 0.5"""
        for p, expected in (("L1", 1.0), ("L2", 1.0), ("Linf", 1.0)):
            self.assertAlmostEqual(error_norm(self.sim, self.ref, p=p, delta_x=0.5), expected)

    def test_relative_norms(self):
        """Relative norms divide by the reference norm"""
        for p in ("L1", "L2", "Linf"):
            self.assertAlmostEqual(
                error_norm(self.sim, self.ref, p=p, relative=True, delta_x=0.5), 0.5)

    def test_vector_field_uses_magnitude(self):
        """Vector errors are pointwise Euclidean"""
        ref = np.zeros((2, 1, 1))
        sim = np.array([[[3.0]], [[4.0]]])
        self.assertAlmostEqual(error_norm(sim, ref, p="Linf"), 5.0)

    def test_mask(self):
        """Masked-out cells do not contribute"""
        sim = self.ref.copy()
        sim[0, 0] += 10.0
        mask = np.ones((2, 2), dtype=bool)
        mask[0, 0] = False
        self.assertEqual(error_norm(sim, self.ref, mask, "Linf"), 0.0)

    def test_invalid(self):
        """Zero references, empty masks and mismatched shapes are rejected"""
        zero = np.zeros((2, 2))
        with self.assertRaises(ValidationError):
            error_norm(self.sim, zero, relative=True)
        with self.assertRaises(ValidationError):
            error_norm(self.sim, self.ref, np.zeros((2, 2), dtype=bool))
        with self.assertRaises(ValidationError):
            error_norm(self.sim, np.zeros((3, 2)))
        with self.assertRaises(ValueError):
            error_norm(self.sim, self.ref, p="L3")

    def test_error_table_keys(self):
        """Six norms with Abs/Rel suffixes"""
        table = error_table(self.sim, self.ref, delta_x=0.5)
        self.assertEqual(set(table), {"L1AbsError", "L1RelError", "L2AbsError",
                                      "L2RelError", "LinfAbsError", "LinfRelError"})


class TestEoc(unittest.TestCase):

    def test_second_order(self):
        """E = C h^2 gives slope 2"""
        pairs = [(h, 3.0 * h ** 2) for h in (0.1, 0.05, 0.025)]
        result = compute_eoc(pairs)
        self.assertAlmostEqual(result.slope, 2.0, places=10)
        for value in result.pairwise:
            self.assertAlmostEqual(value, 2.0, places=10)

    def test_pilot_errors(self):
        """Halving h with errors 0.81, 0.205, 0.049 is second order"""
        pairs = [(0.04, 0.8105925), (0.02, 0.2046164), (0.01, 0.04943049)]
        self.assertAlmostEqual(compute_eoc(pairs).slope, 2.0, delta=0.05)

    def test_invalid(self):
        """EOC needs two positive pairs"""
        with self.assertRaises(ValidationError):
            compute_eoc([(0.1, 0.01)])
        with self.assertRaises(ValidationError):
            compute_eoc([(0.1, 0.01), (0.05, 0.0)])


class TestValueTracer(unittest.TestCase):

    def test_sigma_of_three_values(self):
        """[1, 2, 3] has mean 2 and population sigma sqrt(2/3)"""
        tracer = ValueTracer(3, 0.5)
        for value in (1, 2, 3):
            tracer.update(value)
        self.assertAlmostEqual(tracer.mean, 2.0)
        self.assertAlmostEqual(tracer.sigma, math.sqrt(2.0 / 3.0))
        self.assertTrue(tracer.has_converged())
        self.assertFalse(ValueTracer(3, 0.4).update(1).update(2).update(3).has_converged())

    def test_needs_full_window(self):
        """No verdict before the window is full"""
        tracer = ValueTracer(4, 1.0)
        for _ in range(3):
            tracer.update(1.0)
        self.assertFalse(tracer.has_converged())
        tracer.update(1.0)
        self.assertTrue(tracer.has_converged())

    def test_constant_zero_converges(self):
        """A constant zero signal counts as converged"""
        tracer = ValueTracer(2, 1e-6)
        tracer.update(0.0).update(0.0)
        self.assertTrue(tracer.has_converged())

    def test_window_rolls(self):
        """Only the last window samples count"""
        tracer = ValueTracer(2, 1e-3)
        for value in (100.0, 5.0, 5.0):
            tracer.update(value)
        self.assertEqual(tracer.mean, 5.0)
        self.assertTrue(tracer.has_converged())
        tracer.reset()
        self.assertFalse(tracer.has_converged())

    def test_invalid(self):
        """Window below 2 or non-positive epsilon is rejected"""
        with self.assertRaises(ValidationError):
            ValueTracer(1, 1e-3)
        with self.assertRaises(ValidationError):
            ValueTracer(5, 0.0)


class TestLineFlux(unittest.TestCase):

    def setUp(self):
        data = np.zeros((2, 4, 5))
        data[0] = 0.1
        self.field = Field(data, origin=(0.0, 0.0), delta_x=0.5)

    def test_uniform_flux(self):
        """Phi = dx * sum(u.n) over the line"""
        result = line_flux(self.field, (1.0, 0.0), (1, 0))
        self.assertAlmostEqual(result.flux, 0.25)
        self.assertEqual(result.points, 5)
        self.assertAlmostEqual(result.length, 2.5)
        self.assertAlmostEqual(line_flux(self.field, (1.0, 0.0), (-1, 0)).flux, -0.25)
        self.assertAlmostEqual(line_flux(self.field, (0.0, 1.0), (0, 1)).flux, 0.0)

    def test_masked_flux(self):
        """Masked cells are left out of the sum"""
        mask = np.ones((4, 5), dtype=bool)
        mask[2, :2] = False
        result = line_flux(self.field, (1.0, 0.0), (1, 0), mask)
        self.assertAlmostEqual(result.flux, 0.15)
        self.assertEqual(result.points, 3)

    def test_invalid(self):
        """Off-grid lines, diagonal normals and scalar fields are rejected"""
        with self.assertRaises(GeometryError):
            line_flux(self.field, (10.0, 0.0), (1, 0))
        with self.assertRaises(ValidationError):
            line_flux(self.field, (1.0, 0.0), (1, 1))
        with self.assertRaises(ValidationError):
            line_flux(Field(np.zeros((4, 5))), (1.0, 0.0), (1, 0))


class TestStartScale(unittest.TestCase):

    def test_end_points(self):
        """0 at the start, 1 at and after the ramp"""
        for kind in ("Sinus", "Polynomial"):
            self.assertEqual(start_scale(0, 10, kind), 0.0)
            self.assertAlmostEqual(start_scale(10, 10, kind), 1.0)
            self.assertAlmostEqual(start_scale(50, 10, kind), 1.0)
            self.assertAlmostEqual(start_scale(5, 10, kind), 0.5)

    def test_monotone(self):
        """The ramp never decreases"""
        values = [start_scale(step, 20) for step in range(25)]
        self.assertEqual(values, sorted(values))

    def test_invalid_ramp(self):
        """A ramp needs at least one step"""
        with self.assertRaises(ValidationError):
            start_scale(0, 0)


if __name__ == '__main__':
    unittest.main()
