import sys
import os
import unittest

import numpy as np

# Add root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.errors import (
    MaxIterationsError,
    OptimizerError,
    StepFailureError,
    ValidationError,
)
from app.core.optimize import (
    OptimizationProblem,
    OptimizerParams,
    StepCondition,
    gradient_cdq,
    gradient_fdq,
    lbfgs_direction,
    line_search,
    optimize,
    satisfies_condition,
    trace_rows,
)

A = np.diag([1.0, 10.0])


def quadratic(alpha):
    return 0.5 * float(alpha @ A @ alpha)


def quadratic_gradient(alpha):
    return A @ alpha


def rosenbrock(alpha):
    x, y = alpha
    return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


def rosenbrock_gradient(alpha):
    x, y = alpha
    return np.array([-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)])


class TestGradients(unittest.TestCase):

    def test_difference_quotients(self):
        """FDQ is first order, CDQ exact for quadratics"""
        alpha = np.array([1.0, 2.0])
        exact = quadratic_gradient(alpha)
        np.testing.assert_allclose(gradient_fdq(quadratic, alpha), exact, atol=1e-4)
        np.testing.assert_allclose(gradient_cdq(quadratic, alpha), exact, atol=1e-7)

    def test_evaluation_counts(self):
        """FDQ reuses J(alpha); CDQ needs two evaluations per component"""
        problem = OptimizationProblem(quadratic, 2, gradient_mode="FDQ")
        value = problem.value([1.0, 2.0])
        problem.grad([1.0, 2.0], value)
        self.assertEqual(problem.evaluations, 3)
        problem = OptimizationProblem(quadratic, 2, gradient_mode="CDQ", workers=2)
        problem.grad([1.0, 2.0])
        self.assertEqual(problem.evaluations, 4)

    def test_invalid_step(self):
        """Difference steps must be positive"""
        with self.assertRaises(ValidationError):
            gradient_fdq(quadratic, [1.0, 2.0], h=0.0)


class TestStepConditions(unittest.TestCase):

    def test_conditions(self):
        """Armijo, Wolfe and strong Wolfe on hand-picked slopes"""
        rho, delta = 1e-4, 0.9
        # phi0 = 1, dphi0 = -1, step 1
        self.assertTrue(satisfies_condition("None", 1.0, -1.0, 5.0, None, 1.0, rho, delta))
        self.assertTrue(satisfies_condition("Smaller", 1.0, -1.0, 0.9, None, 1.0, rho, delta))
        self.assertFalse(satisfies_condition("Smaller", 1.0, -1.0, 1.0, None, 1.0, rho, delta))
        self.assertTrue(satisfies_condition("Armijo", 1.0, -1.0, 0.5, None, 1.0, rho, delta))
        self.assertFalse(satisfies_condition("Armijo", 1.0, -1.0, 0.99995, None, 1.0, rho, delta))
        self.assertFalse(satisfies_condition("Wolfe", 1.0, -1.0, 0.5, -0.95, 1.0, rho, delta))
        self.assertTrue(satisfies_condition("Wolfe", 1.0, -1.0, 0.5, 2.0, 1.0, rho, delta))
        self.assertFalse(satisfies_condition("StrongWolfe", 1.0, -1.0, 0.5, 2.0, 1.0, rho, delta))
        self.assertTrue(satisfies_condition("StrongWolfe", 1.0, -1.0, 0.5, 0.5, 1.0, rho, delta))
        self.assertFalse(satisfies_condition("Wolfe", 1.0, -1.0, 0.5, None, 1.0, rho, delta))

    def test_parameter_ranges(self):
        """0 < rho < delta < 1"""
        with self.assertRaises(ValidationError):
            OptimizerParams(armijo_rho=0.0)
        with self.assertRaises(ValidationError):
            OptimizerParams(armijo_rho=0.5, wolfe_delta=0.4)
        with self.assertRaises(ValidationError):
            OptimizerParams(lam=0.0)

    def test_default_conditions(self):
        """Each method picks its customary step rule"""
        self.assertEqual(OptimizerParams(method="LBFGS").step_condition,
                         StepCondition.STRONG_WOLFE)
        self.assertEqual(OptimizerParams(method="SteepestDescent").step_condition,
                         StepCondition.ARMIJO)
        self.assertEqual(OptimizerParams(method="BarzilaiBorwein").step_condition,
                         StepCondition.NONE)


class TestLineSearch(unittest.TestCase):

    def test_accepted_step_satisfies_condition(self):
        """Every step rule returns a point meeting it"""
        alpha = np.array([1.0, 1.0])
        for condition in ("Smaller", "Armijo", "Wolfe", "StrongWolfe"):
            problem = OptimizationProblem(quadratic, 2, quadratic_gradient, "Provided")
            params = OptimizerParams(method="SteepestDescent", step_condition=condition)
            gradient = quadratic_gradient(alpha)
            result = line_search(problem, alpha, quadratic(alpha), gradient, -gradient, params)
            self.assertLess(result.value, quadratic(alpha), condition)
            self.assertGreaterEqual(result.attempts, 1)

    def test_not_descent(self):
        """An ascent direction is rejected"""
        problem = OptimizationProblem(quadratic, 2, quadratic_gradient, "Provided")
        alpha = np.array([1.0, 1.0])
        gradient = quadratic_gradient(alpha)
        with self.assertRaises(OptimizerError):
            line_search(problem, alpha, quadratic(alpha), gradient, gradient, OptimizerParams())

    def test_step_failure_carries_best_point(self):
        """Exhausted attempts raise with the best trial"""
        problem = OptimizationProblem(lambda a: 1.0, 1, lambda a: np.array([1.0]), "Provided")
        params = OptimizerParams(method="SteepestDescent", step_condition="Smaller",
                                 max_step_attempts=5)
        with self.assertRaises(StepFailureError) as ctx:
            line_search(problem, [0.0], 1.0, [1.0], [-1.0], params)
        self.assertEqual(ctx.exception.best_value, 1.0)
        self.assertEqual(problem.evaluations, 5)

    def test_lbfgs_without_memory(self):
        """Empty memory gives steepest descent"""
        np.testing.assert_array_equal(lbfgs_direction([], [1.0, -2.0]), [-1.0, 2.0])

    def test_lbfgs_skips_bad_curvature(self):
        """Pairs with s.y <= 0 are ignored"""
        memory = [(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))]
        np.testing.assert_array_equal(lbfgs_direction(memory, [1.0, 1.0]), [-1.0, -1.0])


class TestOptimize(unittest.TestCase):

    def test_rosenbrock_lbfgs(self):
        """LBFGS reaches the Rosenbrock minimum from (-1.2, 1)"""
        problem = OptimizationProblem(rosenbrock, 2, rosenbrock_gradient, "Provided")
        params = OptimizerParams(method="LBFGS", max_iter=200, tolerance=1e-8,
                                 max_step_attempts=30)
        state = optimize(problem, params, [-1.2, 1.0])
        self.assertTrue(state.converged)
        self.assertLess(state.value, 1e-10)
        np.testing.assert_allclose(state.control, [1.0, 1.0], atol=1e-4)

    def test_steepest_descent_decreases(self):
        """Steepest descent with Armijo decreases J every iteration"""
        problem = OptimizationProblem(quadratic, 2, quadratic_gradient, "Provided")
        params = OptimizerParams(method="SteepestDescent", max_iter=30,
                                 fail_on_max_iter=False)
        state = optimize(problem, params, [1.0, 1.0])
        values = [entry.value for entry in state.trace]
        for before, after in zip(values, values[1:]):
            self.assertLess(after, before)

    def test_barzilai_borwein(self):
        """Barzilai-Borwein converges on a convex quadratic"""
        problem = OptimizationProblem(quadratic, 2, quadratic_gradient, "Provided")
        params = OptimizerParams(method="BarzilaiBorwein", max_iter=200, tolerance=1e-8)
        state = optimize(problem, params, [1.0, 1.0])
        self.assertTrue(state.converged)
        self.assertLess(state.grad_norm, 1e-8)

    def test_finite_difference_lbfgs(self):
        """CDQ gradients are good enough for LBFGS on a quadratic"""
        problem = OptimizationProblem(quadratic, 2, gradient_mode="CDQ")
        params = OptimizerParams(method="LBFGS", tolerance=1e-6)
        state = optimize(problem, params, [1.0, -1.0])
        np.testing.assert_allclose(state.control, [0.0, 0.0], atol=1e-6)

    def test_bounds_clamp(self):
        """A minimum outside the box stops on the bound"""
        problem = OptimizationProblem(lambda a: float((a[0] - 5.0) ** 2), 1,
                                      lambda a: np.array([2.0 * (a[0] - 5.0)]), "Provided",
                                      lower=0.0, upper=2.0)
        params = OptimizerParams(method="SteepestDescent", max_iter=20)
        state = optimize(problem, params, [0.0])
        self.assertTrue(state.converged)
        self.assertEqual(state.control.tolist(), [2.0])

    def test_max_iterations(self):
        """Hitting MaxIter raises when FailOnMaxIter is set"""
        problem = OptimizationProblem(quadratic, 2, quadratic_gradient, "Provided")
        with self.assertRaises(MaxIterationsError):
            optimize(problem, OptimizerParams(max_iter=1), [1.0, 1.0])
        state = optimize(problem, OptimizerParams(max_iter=1, fail_on_max_iter=False),
                         [1.0, 1.0])
        self.assertFalse(state.converged)
        self.assertEqual(state.iteration, 1)

    def test_trace_rows(self):
        """Trace table has one row per iteration plus the start"""
        problem = OptimizationProblem(quadratic, 2, quadratic_gradient, "Provided")
        state = optimize(problem, OptimizerParams(max_iter=3, fail_on_max_iter=False),
                         [1.0, 1.0])
        header, rows = trace_rows(state)
        self.assertEqual(header, ["it", "J", "gradNorm", "step", "alpha0", "alpha1"])
        self.assertEqual(len(rows), state.iteration + 1)
        self.assertEqual(rows[0][0], 0)

    def test_problem_validation(self):
        """Provided mode needs a gradient; bounds must be ordered"""
        with self.assertRaises(ValidationError):
            OptimizationProblem(quadratic, 2, gradient_mode="Provided")
        with self.assertRaises(ValidationError):
            OptimizationProblem(quadratic, 2, lower=1.0, upper=0.0)

    def test_non_finite_objective(self):
        """NaN objectives abort the run"""
        problem = OptimizationProblem(lambda a: float("nan"), 1, gradient_mode="FDQ")
        with self.assertRaises(OptimizerError):
            optimize(problem, OptimizerParams(), [0.0])


if __name__ == '__main__':
    unittest.main()
