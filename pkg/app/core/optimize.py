#!/usr/bin/env python3
"""
Gradient-Based Optimizer
Difference-quotient gradients, line-search step rules and the steepest
descent / Barzilai-Borwein / LBFGS drivers.

Based on:
- Armijo: J(a + s d) <= J(a) + rho s g.d
- Wolfe:  g(a + s d).d >= delta g.d (plus Armijo)
- Strong Wolfe: |g(a + s d).d| <= -delta g.d (plus Armijo)
- LBFGS two-loop recursion with gamma = s.y / y.y initial scaling
"""

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Deque, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import MaxIterationsError, OptimizerError, StepFailureError, ValidationError
from app.core.ostream import get_logger

logger = get_logger("Optimizer")

CURVATURE_GUARD = 1e-14

# =============================================================================
# SETTINGS
# =============================================================================


class GradientMode(str, Enum):
    FDQ = "FDQ"
    CDQ = "CDQ"
    PROVIDED = "Provided"


class Method(str, Enum):
    STEEPEST_DESCENT = "SteepestDescent"
    LBFGS = "LBFGS"
    BARZILAI_BORWEIN = "BarzilaiBorwein"


class StepCondition(str, Enum):
    NONE = "None"
    SMALLER = "Smaller"
    ARMIJO = "Armijo"
    WOLFE = "Wolfe"
    STRONG_WOLFE = "StrongWolfe"


DEFAULT_CONDITION = {
    Method.STEEPEST_DESCENT: StepCondition.ARMIJO,
    Method.LBFGS: StepCondition.STRONG_WOLFE,
    Method.BARZILAI_BORWEIN: StepCondition.NONE,
}


@dataclass
class OptimizerParams:
    method: Method = Method.LBFGS
    max_iter: int = 100
    max_step_attempts: int = 20
    tolerance: float = 1e-10
    control_tolerance: float = 0.0
    lam: float = 1.0
    memory: int = 20
    step_condition: Optional[StepCondition] = None
    armijo_rho: float = 1e-4
    wolfe_delta: float = 0.9
    fail_on_max_iter: bool = True
    verbose: bool = False

    def __post_init__(self):
        self.method = Method(self.method)
        if self.step_condition is None:
            self.step_condition = DEFAULT_CONDITION[self.method]
        self.step_condition = StepCondition(self.step_condition)
        if not 0.0 < self.armijo_rho < 1.0:
            raise ValidationError(f"Armijo rho must lie in (0, 1), got {self.armijo_rho}")
        if not self.armijo_rho < self.wolfe_delta < 1.0:
            raise ValidationError(f"Wolfe delta must lie in (rho, 1), got {self.wolfe_delta}")
        if not self.lam > 0:
            raise ValidationError(f"Lambda must be positive, got {self.lam}")
        if self.memory < 0:
            raise ValidationError(f"LBFGS memory must be non-negative, got {self.memory}")
        if self.max_iter < 0 or self.max_step_attempts < 1:
            raise ValidationError("MaxIter must be >= 0 and MaxStepAttempts >= 1")


# =============================================================================
# PROBLEM
# =============================================================================

def _component_steps(alpha: np.ndarray, h: float) -> np.ndarray:
    return np.maximum(1.0, np.abs(alpha)) * h


def _evaluate_all(objective, points: List[np.ndarray], workers: int) -> List[float]:
    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return [float(v) for v in pool.map(objective, points)]
    return [float(objective(p)) for p in points]


def gradient_fdq(objective: Callable, alpha, h: float = 1e-6,
                 value: Optional[float] = None, workers: int = 1) -> np.ndarray:
    """Forward difference quotient, step max(1, |a_k|) h per component."""
    if not h > 0:
        raise ValidationError(f"Finite-difference step must be positive, got {h}")
    alpha = np.asarray(alpha, dtype=np.float64)
    steps = _component_steps(alpha, h)
    points = []
    for k in range(alpha.size):
        shifted = alpha.copy()
        shifted[k] += steps[k]
        points.append(shifted)
    if value is None:
        value = float(objective(alpha))
    shifted_values = _evaluate_all(objective, points, workers)
    return np.array([(v - value) / steps[k] for k, v in enumerate(shifted_values)])


def gradient_cdq(objective: Callable, alpha, h: float = 1e-6, workers: int = 1) -> np.ndarray:
    """Central difference quotient, step max(1, |a_k|) h per component."""
    if not h > 0:
        raise ValidationError(f"Finite-difference step must be positive, got {h}")
    alpha = np.asarray(alpha, dtype=np.float64)
    steps = _component_steps(alpha, h)
    points = []
    for k in range(alpha.size):
        plus, minus = alpha.copy(), alpha.copy()
        plus[k] += steps[k]
        minus[k] -= steps[k]
        points.extend((plus, minus))
    values = _evaluate_all(objective, points, workers)
    return np.array([(values[2 * k] - values[2 * k + 1]) / (2.0 * steps[k])
                     for k in range(alpha.size)])


@dataclass
class OptimizationProblem:
    """Black-box objective J(alpha) with optional bounds and gradient."""
    objective: Callable[[np.ndarray], float]
    dim: int
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gradient_mode: GradientMode = GradientMode.FDQ
    fd_step: float = 1e-6
    lower: Optional[Union[float, Sequence[float]]] = None
    upper: Optional[Union[float, Sequence[float]]] = None
    workers: int = 1
    evaluations: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"Control dimension must be >= 1, got {self.dim}")
        self.gradient_mode = GradientMode(self.gradient_mode)
        if self.gradient_mode == GradientMode.PROVIDED and self.gradient is None:
            raise ValidationError("Gradient mode Provided needs a gradient function")
        self._lower = self._bound(self.lower, -np.inf)
        self._upper = self._bound(self.upper, np.inf)
        if np.any(self._lower > self._upper):
            raise ValidationError("Lower bound exceeds upper bound")

    def _bound(self, value, fill: float) -> np.ndarray:
        if value is None:
            return np.full(self.dim, fill)
        arr = np.broadcast_to(np.asarray(value, dtype=np.float64), (self.dim,))
        return arr.copy()

    def clamp(self, alpha) -> np.ndarray:
        return np.clip(np.asarray(alpha, dtype=np.float64), self._lower, self._upper)

    def project(self, alpha, direction) -> np.ndarray:
        """Drop direction components that push an active bound outwards."""
        direction = np.array(direction, dtype=np.float64)
        direction[(alpha <= self._lower) & (direction < 0)] = 0.0
        direction[(alpha >= self._upper) & (direction > 0)] = 0.0
        return direction

    def value(self, alpha) -> float:
        self.evaluations += 1
        result = float(self.objective(np.asarray(alpha, dtype=np.float64)))
        if not math.isfinite(result):
            raise OptimizerError(f"Objective returned {result} at {np.asarray(alpha).tolist()}")
        return result

    def grad(self, alpha, value: Optional[float] = None) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=np.float64)
        if self.gradient_mode == GradientMode.PROVIDED:
            return np.asarray(self.gradient(alpha), dtype=np.float64)
        if self.gradient_mode == GradientMode.CDQ:
            return gradient_cdq(self.value, alpha, self.fd_step, self.workers)
        return gradient_fdq(self.value, alpha, self.fd_step, value, self.workers)


# =============================================================================
# LINE SEARCH
# =============================================================================

@dataclass
class LineSearchResult:
    step: float
    control: np.ndarray
    value: float
    gradient: Optional[np.ndarray] = None
    attempts: int = 0


def satisfies_condition(condition: StepCondition, phi0: float, dphi0: float, phi: float,
                        dphi: Optional[float], step: float, rho: float, delta: float) -> bool:
    """Whether a trial step meets the given step condition."""
    condition = StepCondition(condition)
    if condition == StepCondition.NONE:
        return True
    if condition == StepCondition.SMALLER:
        return phi < phi0
    armijo = phi <= phi0 + rho * step * dphi0
    if condition == StepCondition.ARMIJO:
        return armijo
    if dphi is None:
        return False
    if condition == StepCondition.WOLFE:
        return armijo and dphi >= delta * dphi0
    return armijo and abs(dphi) <= -delta * dphi0


class _Trials:
    """Evaluates trial steps along a ray and remembers the best one."""

    def __init__(self, problem: OptimizationProblem, alpha, direction, max_attempts: int):
        self.problem = problem
        self.alpha = alpha
        self.direction = direction
        self.max_attempts = max_attempts
        self.attempts = 0
        self.best: Optional[Tuple[float, np.ndarray, float]] = None

    def evaluate(self, step: float) -> Tuple[np.ndarray, float]:
        if self.attempts >= self.max_attempts:
            raise self.failure()
        self.attempts += 1
        control = self.problem.clamp(self.alpha + step * self.direction)
        phi = self.problem.value(control)
        if self.best is None or phi < self.best[2]:
            self.best = (step, control, phi)
        return control, phi

    def slope(self, control: np.ndarray, phi: float) -> Tuple[np.ndarray, float]:
        grad = self.problem.grad(control, phi)
        return grad, float(grad @ self.direction)

    def failure(self) -> StepFailureError:
        step, control, phi = self.best if self.best else (0.0, self.alpha, float("inf"))
        return StepFailureError(
            f"Line search failed after {self.attempts} step attempts",
            best_step=step, best_value=phi, best_control=np.asarray(control).tolist())


def line_search(problem: OptimizationProblem, alpha, value: float, gradient,
                direction, params: OptimizerParams) -> LineSearchResult:
    """
    Find a step along ``direction`` satisfying ``params.step_condition``.

    Backtracking by halving for None/Smaller/Armijo, bracketing with
    bisection for Wolfe/StrongWolfe.

    Raises:
        StepFailureError: when MaxStepAttempts trial points were not enough
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    dphi0 = float(np.asarray(gradient) @ direction)
    condition = params.step_condition
    if condition != StepCondition.NONE and not dphi0 < 0:
        raise OptimizerError(f"Search direction is not a descent direction (g.d = {dphi0})")
    trials = _Trials(problem, alpha, direction, params.max_step_attempts)

    if condition == StepCondition.WOLFE:
        result = _weak_wolfe(trials, value, dphi0, params)
    elif condition == StepCondition.STRONG_WOLFE:
        result = _strong_wolfe(trials, value, dphi0, params)
    else:
        result = _backtrack(trials, value, dphi0, params)
    result.attempts = trials.attempts

    dphi = None if result.gradient is None else float(result.gradient @ direction)
    if not satisfies_condition(condition, value, dphi0, result.value, dphi, result.step,
                               params.armijo_rho, params.wolfe_delta):
        raise StepFailureError(f"Accepted step {result.step} violates {condition.value}",
                               result.step, result.value, result.control.tolist())
    return result


def _backtrack(trials: _Trials, phi0: float, dphi0: float,
               params: OptimizerParams) -> LineSearchResult:
    step = params.lam
    while True:
        control, phi = trials.evaluate(step)
        if satisfies_condition(params.step_condition, phi0, dphi0, phi, None, step,
                               params.armijo_rho, params.wolfe_delta):
            return LineSearchResult(step, control, phi)
        step *= 0.5


def _weak_wolfe(trials: _Trials, phi0: float, dphi0: float,
                params: OptimizerParams) -> LineSearchResult:
    rho, delta = params.armijo_rho, params.wolfe_delta
    lo, hi = 0.0, math.inf
    step = params.lam
    while True:
        control, phi = trials.evaluate(step)
        if phi > phi0 + rho * step * dphi0:
            hi = step
        else:
            grad, dphi = trials.slope(control, phi)
            if dphi >= delta * dphi0:
                return LineSearchResult(step, control, phi, grad)
            lo = step
        step = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * lo


def _strong_wolfe(trials: _Trials, phi0: float, dphi0: float,
                  params: OptimizerParams) -> LineSearchResult:
    rho, delta = params.armijo_rho, params.wolfe_delta
    prev_step, prev_phi = 0.0, phi0
    step = params.lam
    first = True
    while True:
        control, phi = trials.evaluate(step)
        if phi > phi0 + rho * step * dphi0 or (not first and phi >= prev_phi):
            return _zoom(trials, phi0, dphi0, prev_step, prev_phi, step, params)
        grad, dphi = trials.slope(control, phi)
        if abs(dphi) <= -delta * dphi0:
            return LineSearchResult(step, control, phi, grad)
        if dphi >= 0:
            return _zoom(trials, phi0, dphi0, step, phi, prev_step, params)
        prev_step, prev_phi = step, phi
        step *= 2.0
        first = False


def _zoom(trials: _Trials, phi0: float, dphi0: float, lo: float, phi_lo: float,
          hi: float, params: OptimizerParams) -> LineSearchResult:
    rho, delta = params.armijo_rho, params.wolfe_delta
    while True:
        step = 0.5 * (lo + hi)
        control, phi = trials.evaluate(step)
        if phi > phi0 + rho * step * dphi0 or phi >= phi_lo:
            hi = step
            continue
        grad, dphi = trials.slope(control, phi)
        if abs(dphi) <= -delta * dphi0:
            return LineSearchResult(step, control, phi, grad)
        if dphi * (hi - lo) >= 0:
            hi = lo
        lo, phi_lo = step, phi


# =============================================================================
# DESCENT DIRECTIONS
# =============================================================================

@dataclass
class TraceEntry:
    iteration: int
    value: float
    grad_norm: float
    step: float
    control: List[float]


@dataclass
class OptimizerState:
    control: np.ndarray
    value: float
    gradient: np.ndarray
    memory: Deque[Tuple[np.ndarray, np.ndarray]]
    iteration: int = 0
    converged: bool = False
    trace: List[TraceEntry] = field(default_factory=list)

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.gradient))

    def record(self, step: float) -> None:
        self.trace.append(TraceEntry(self.iteration, self.value, self.grad_norm, step,
                                     self.control.tolist()))


def _usable_pairs(memory) -> List[Tuple[np.ndarray, np.ndarray]]:
    pairs = []
    for s, y in memory:
        sy = float(s @ y)
        if sy > CURVATURE_GUARD * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y))
    return pairs


def lbfgs_direction(memory, gradient) -> np.ndarray:
    """Two-loop recursion; pairs failing the curvature guard are skipped."""
    gradient = np.asarray(gradient, dtype=np.float64)
    pairs = _usable_pairs(memory)
    if not pairs:
        return -gradient
    q = gradient.copy()
    alphas = []
    for s, y in reversed(pairs):
        a = (s @ q) / (y @ s)
        q -= a * y
        alphas.append(a)
    s_last, y_last = pairs[-1]
    r = (s_last @ y_last) / (y_last @ y_last) * q
    for (s, y), a in zip(pairs, reversed(alphas)):
        b = (y @ r) / (y @ s)
        r += s * (a - b)
    return -r


def barzilai_borwein_direction(memory, gradient) -> np.ndarray:
    gradient = np.asarray(gradient, dtype=np.float64)
    pairs = _usable_pairs(list(memory)[-1:])
    if not pairs:
        return -gradient
    s, y = pairs[-1]
    return -(s @ y) / (y @ y) * gradient


def _direction(method: Method, state: OptimizerState) -> np.ndarray:
    if method == Method.LBFGS:
        return lbfgs_direction(state.memory, state.gradient)
    if method == Method.BARZILAI_BORWEIN:
        return barzilai_borwein_direction(state.memory, state.gradient)
    return -state.gradient


# =============================================================================
# DRIVER
# =============================================================================

def optimize(problem: OptimizationProblem, params: OptimizerParams,
             alpha0) -> OptimizerState:
    """
    Iterate alpha <- clamp(alpha + s d) until the gradient norm drops below
    Tolerance, the control change below ControlTolerance, or MaxIter.

    Returns:
        Final OptimizerState with the full trace

    Raises:
        StepFailureError, MaxIterationsError (when FailOnMaxIter), OptimizerError
    """
    alpha = problem.clamp(np.asarray(alpha0, dtype=np.float64).reshape(problem.dim))
    if not np.all(np.isfinite(alpha)):
        raise ValidationError("Start value must be finite")
    value = problem.value(alpha)
    memory_size = params.memory if params.method == Method.LBFGS else 1
    state = OptimizerState(alpha, value, problem.grad(alpha, value), deque(maxlen=memory_size))
    state.record(0.0)
    logger.info(f"Start {params.method.value} ({params.step_condition.value}): "
                f"J={value:.6e}, |dJ|={state.grad_norm:.6e}")

    while True:
        if state.grad_norm < params.tolerance:
            state.converged = True
            break
        if state.iteration >= params.max_iter:
            break

        direction = problem.project(state.control, _direction(params.method, state))
        if float(state.gradient @ direction) >= 0:
            state.memory.clear()
            direction = problem.project(state.control, -state.gradient)
        if not np.any(direction):
            # stationary on the bounds
            state.converged = True
            break
        result = line_search(problem, state.control, state.value, state.gradient,
                             direction, params)
        new_gradient = result.gradient
        if new_gradient is None:
            new_gradient = problem.grad(result.control, result.value)

        s = result.control - state.control
        state.memory.append((s, new_gradient - state.gradient))
        state.control, state.value, state.gradient = result.control, result.value, new_gradient
        state.iteration += 1
        state.record(result.step)
        if params.verbose:
            logger.info(f"it={state.iteration}; J={state.value:.6e}; "
                        f"|dJ|={state.grad_norm:.6e}; step={result.step:.4g}")

        step_norm = float(np.linalg.norm(s))
        # a zero step means the projected iterate is stationary on the bounds
        if step_norm < params.control_tolerance or step_norm == 0.0:
            state.converged = True
            break

    if not state.converged:
        message = "Optimization problem failed to converge within specified iteration limit"
        if params.fail_on_max_iter:
            raise MaxIterationsError(message)
        logger.warning(message)
    logger.info(f"Finished after {state.iteration} iterations: J={state.value:.6e}, "
                f"|dJ|={state.grad_norm:.6e}, control={state.control.tolist()}")
    return state


def trace_rows(state: OptimizerState) -> Tuple[List[str], List[list]]:
    """CSV header and rows of an optimizer trace."""
    dim = len(state.control)
    header = ["it", "J", "gradNorm", "step"] + [f"alpha{k}" for k in range(dim)]
    rows = [[e.iteration, e.value, e.grad_norm, e.step] + list(e.control) for e in state.trace]
    return header, rows
