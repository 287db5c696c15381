import sys
import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.cases import case_names, run_case, run_eoc, run_optimization
from app.cases import cavity
from app.cases.common import load_case_config
from app.core.errors import ValidationError
from app.core.output import read_csv

QUIET = {"Output.SaveTime": 0, "Output.PrintLogConverter": "false"}


def small_config(case, tmp, **overrides):
    values = dict(QUIET)
    values.update(overrides)
    return load_case_config(case, output_dir=str(tmp), overrides=values)


class CaseTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class TestRegistry(CaseTestCase):

    def test_names(self):
        """All seven benchmark cases are registered"""
        self.assertEqual(case_names(), sorted([
            "poiseuille2d", "advectionDiffusion1d", "advectionDiffusion2d", "porousPlate2d",
            "cavity2d", "rosenbrock", "poiseuilleIdentification"]))

    def test_unknown_case(self):
        """Unknown names are a validation error listing the known ones"""
        with self.assertRaises(ValidationError) as ctx:
            run_case("karmanVortexStreet", output_dir=str(self.tmp))
        self.assertIn("poiseuille2d", str(ctx.exception))

    def test_eoc_requirements(self):
        """EOC needs a case with error norms and increasing resolutions"""
        with self.assertRaises(ValidationError):
            run_eoc("cavity2d", small_config("cavity2d", self.tmp))
        config = small_config("poiseuille2d", self.tmp)
        with self.assertRaises(ValidationError):
            run_eoc("poiseuille2d", config, [11])
        with self.assertRaises(ValidationError):
            run_eoc("poiseuille2d", config, [21, 11])
        with self.assertRaises(ValidationError):
            small_config("poiseuille2d", self.tmp, **{"Application.Mesh.Resolutions": "21, 11"})

    def test_optimization_only(self):
        """The optimize action refuses simulation cases"""
        with self.assertRaises(ValidationError):
            run_optimization("poiseuille2d", small_config("poiseuille2d", self.tmp))


class TestPoiseuille(CaseTestCase):

    def test_force_driven_accuracy(self):
        """Steady force-driven channel matches the parabola and improves with N"""
        errors = []
        for n in (11, 21):
            config = small_config("poiseuille2d", self.tmp / f"N{n}", **{
                "Application.Discretization.Resolution": n})
            report = run_case("poiseuille2d", config)
            self.assertTrue(report.converged)
            errors.append(report.rows[-1]["L2RelError"])
        self.assertLess(errors[0], 0.05)
        self.assertLess(errors[1], errors[0])

    def test_outputs(self):
        """velocityErrors.csv, a VTI snapshot and a heatmap are written"""
        config = small_config("poiseuille2d", self.tmp, **{
            "Application.Discretization.Resolution": 11})
        report = run_case("poiseuille2d", config)
        header, rows = read_csv(config.output_dir / "velocityErrors.csv")
        self.assertEqual(header[:3], ["N", "deltaX", "steps"])
        self.assertIn("L2RelError", header)
        self.assertEqual(rows[0][0], "11")
        suffixes = sorted(Path(path).suffix for path in report.files)
        self.assertIn(".vti", suffixes)
        self.assertIn(".ppm", suffixes)

    def test_zero_force_stays_at_rest(self):
        """Without forcing the channel never moves"""
        config = small_config("poiseuille2d", self.tmp, **{
            "Application.Discretization.Resolution": 11,
            "Application.PhysParameters.ForceFactor": 0.0,
            "Application.PhysParameters.PhysMaxTime": 1.0})
        report = run_case("poiseuille2d", config)
        self.assertAlmostEqual(report.rows[-1]["LinfAbsError"], 0.0, delta=1e-12)

    def test_inlet_outlet(self):
        """Zou-He inlet and outlet drive a developed channel flow"""
        config = small_config("poiseuille2d", self.tmp, **{
            "Application.Mode": "InletOutlet",
            "Application.Discretization.Resolution": 11,
            "Application.PhysParameters.StartUpTime": 1.0})
        report = run_case("poiseuille2d", config)
        self.assertEqual(report.mode, "InletOutlet")
        self.assertLess(report.rows[-1]["L2RelError"], 0.1)

    def test_unknown_mode(self):
        """Only ForceDriven and InletOutlet exist"""
        config = small_config("poiseuille2d", self.tmp, **{"Application.Mode": "Periodic"})
        with self.assertRaises(ValidationError):
            run_case("poiseuille2d", config)


class TestAdvectionDiffusion(CaseTestCase):

    def test_reference_run(self):
        """N = 50 takes 97 steps and reproduces the reference average error"""
        config = small_config("advectionDiffusion1d", self.tmp, **{
            "Application.Discretization.Resolution": 50})
        report = run_case("advectionDiffusion1d", config)
        row = report.rows[-1]
        self.assertEqual(row["steps"], 97)
        self.assertAlmostEqual(row["averageL2RelError"], 0.8105925, delta=1e-4)
        self.assertLess(report.extra["initialL2RelError"], 1e-14)
        header, rows = read_csv(config.output_dir / "averageSimL2RelErr.csv")
        self.assertIn("averageL2RelError", header)
        self.assertEqual(len(rows), 1)

    def test_second_order_convergence(self):
        """Halving the spacing three times gives an EOC close to two"""
        config = small_config("advectionDiffusion1d", self.tmp)
        report = run_eoc("advectionDiffusion1d", config, [50, 100, 200])
        self.assertEqual([row["N"] for row in report.rows], [50, 100, 200])
        self.assertAlmostEqual(report.rows[1]["averageL2RelError"], 0.2046164, delta=1e-4)
        self.assertAlmostEqual(report.rows[2]["averageL2RelError"], 0.04943049, delta=1e-4)
        self.assertAlmostEqual(report.eoc["averageL2RelError"], 2.0, delta=0.1)
        self.assertTrue((config.output_dir / "eoc.csv").exists())

    def test_pure_diffusion(self):
        """Zero Peclet number is a pure diffusion run"""
        config = small_config("advectionDiffusion1d", self.tmp, **{
            "Application.Discretization.Resolution": 100,
            "Application.PhysParameters.PecletNumber": 0.0})
        report = run_case("advectionDiffusion1d", config)
        self.assertEqual(report.rows[-1]["latticeVelocity"], 0.0)
        self.assertAlmostEqual(report.rows[-1]["averageL2RelError"], 0.05725828, delta=1e-4)

    def test_two_dimensional(self):
        """The 2D pulse converges under refinement"""
        errors = []
        for n in (20, 40):
            config = small_config("advectionDiffusion2d", self.tmp / f"N{n}", **{
                "Application.Discretization.Resolution": n})
            errors.append(run_case("advectionDiffusion2d", config).rows[-1]["averageL2RelError"])
        self.assertLess(errors[1], errors[0])


class TestPorousPlate(CaseTestCase):

    def test_steady_profiles(self):
        """Velocity and temperature approach the exponential profiles"""
        config = small_config("porousPlate2d", self.tmp, **{
            "Application.Discretization.Resolution": 16})
        report = run_case("porousPlate2d", config)
        row = report.rows[-1]
        self.assertTrue(report.converged)
        self.assertLess(row["velocityError"], 1e-2)
        self.assertLess(row["temperatureError"], 1e-2)
        # Pr = 1 makes the normalized profiles coincide
        self.assertLess(row["profileCollapseGap"], 1e-2)
        self.assertTrue((config.output_dir / "porousPlateErrors.csv").exists())

    def test_no_restart(self):
        """Coupled runs refuse a single-lattice checkpoint"""
        config = small_config("porousPlate2d", self.tmp)
        config.restart = self.tmp / "state.chk"
        with self.assertRaises(ValidationError):
            run_case("porousPlate2d", config)


class TestCavity(CaseTestCase):

    def cavity_config(self, tmp, **overrides):
        values = {
            "Application.Discretization.Resolution": 16,
            "Application.PhysParameters.PhysViscosity": 0.1,
            "Application.PhysParameters.PhysMaxTime": 10.0,
            "Application.PhysParameters.StartUpTime": 0.1,
            "Application.ConvergenceCheck.Interval": 0.1,
            "Application.ConvergenceCheck.Residuum": 1e-3,
        }
        values.update(overrides)
        return small_config("cavity2d", tmp, **values)

    def test_reaches_steady_state(self):
        """Re = 10 cavity converges with a bounded lid-driven velocity"""
        config = self.cavity_config(self.tmp)
        report = run_case("cavity2d", config)
        row = report.rows[-1]
        self.assertTrue(report.converged)
        self.assertGreater(report.convergence_step, 0)
        self.assertLess(row["maxVelocity"], 1.05)
        self.assertGreater(row["maxVelocity"], 0.0)
        self.assertLess(abs(row["densityDrift"]), 1e-2)
        self.assertTrue((config.output_dir / "cavityStatistics.csv").exists())

    def test_restart_is_bit_exact(self):
        """A run restarted from its halfway checkpoint ends in the same state"""
        overrides = {
            "Application.Discretization.Resolution": 8,
            "Application.PhysParameters.PhysMaxTime": 1.0,
            "Output.CheckpointTime": 0.5,
            "Application.ConvergenceCheck.Residuum": 1e-12,
        }
        first = self.cavity_config(self.tmp / "first", **overrides)
        _, full, _, converter = cavity.simulate(first)
        halfway = converter.lattice_time(0.5)
        checkpoint = first.output_dir / "checkpoints" / f"cavity2d_iT{halfway:08d}.chk"
        self.assertTrue(checkpoint.exists())

        second = self.cavity_config(self.tmp / "second", **overrides)
        second.restart = checkpoint
        _, resumed, _, _ = cavity.simulate(second)
        try:
            self.assertEqual(resumed.step, full.step)
            np.testing.assert_array_equal(resumed.f, full.f)
        finally:
            full.close()
            resumed.close()


class TestOptimizationCases(CaseTestCase):

    def test_rosenbrock(self):
        """LBFGS with default settings finds (1, 1)"""
        config = small_config("rosenbrock", self.tmp)
        report = run_optimization("rosenbrock", config)
        row = report.rows[-1]
        self.assertLess(row["objective"], 1e-10)
        self.assertLessEqual(report.extra["iterations"], 100)
        self.assertAlmostEqual(row["alpha0"], 1.0, delta=1e-4)
        self.assertAlmostEqual(row["alpha1"], 1.0, delta=1e-4)
        header, rows = read_csv(config.output_dir / "optimizerTrace.csv")
        self.assertEqual(header[:3], ["it", "J", "gradNorm"])
        self.assertEqual(len(rows), report.extra["iterations"] + 1)

    def test_mass_flow_identification(self):
        """The inlet scale is recovered from the target mass flow"""
        config = small_config("poiseuilleIdentification", self.tmp, **{
            "Application.Discretization.Resolution": 8,
            "Application.PhysParameters.PhysMaxTime": 1.0,
            "Optimization.Verbose": "false"})
        report = run_optimization("poiseuilleIdentification", config)
        row = report.rows[-1]
        self.assertLess(row["relativeControlError"], 1e-2)
        self.assertGreater(row["targetMassFlow"], 0.0)
        self.assertGreaterEqual(row["forwardRuns"], 3)
        self.assertTrue((config.output_dir / "identification.csv").exists())


@unittest.skipUnless(os.environ.get("LBKIT_SLOW_TESTS"), "set LBKIT_SLOW_TESTS=1 for full-resolution studies")
class TestFullResolutionStudies(CaseTestCase):

    def test_poiseuille_refinement(self):
        """Channel error drops strictly over N = 21, 31, 41, 51 and is below 1e-2 at 51"""
        config = small_config("poiseuille2d", self.tmp)
        report = run_eoc("poiseuille2d", config, [21, 31, 41, 51])
        errors = [row["L2RelError"] for row in report.rows]
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])), errors)
        self.assertLess(errors[-1], 1e-2)

    def test_advection_diffusion_2d_order(self):
        """2D pulse converges with order in [1.8, 2.2] over N = 50, 100, 200"""
        config = small_config("advectionDiffusion2d", self.tmp)
        report = run_eoc("advectionDiffusion2d", config, [50, 100, 200])
        slope = report.eoc["averageL2RelError"]
        self.assertGreaterEqual(slope, 1.8)
        self.assertLessEqual(slope, 2.2)

    def test_porous_plate_fine_grid(self):
        """At N = 64 both profile errors stay below 1e-2"""
        config = small_config("porousPlate2d", self.tmp, **{
            "Application.Discretization.Resolution": 64})
        row = run_case("porousPlate2d", config).rows[-1]
        self.assertLess(row["velocityError"], 1e-2)
        self.assertLess(row["temperatureError"], 1e-2)


if __name__ == '__main__':
    unittest.main()
