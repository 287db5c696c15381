#!/usr/bin/env python3
"""
Optimization Cases
Rosenbrock showcase and a mass-flow identification on a small channel.

Based on:
- J(a) = (1 - a_0)^2 + 100 (a_1 - a_0^2)^2, minimum 0 at (1, 1)
- Identification objective J(a) = 1/2 ((m(a) - m*) / m*)^2 with m the
  flux through the mid-channel line and m* the flux of a run at the true
  inlet velocity scale
"""

from typing import Callable, Dict, List, Optional

import numpy as np

from app.cases.common import CaseConfig, CaseReport, write_report_csv
from app.cases.poiseuille import (
    FLUID,
    INLET,
    inlet_profile,
    make_poiseuille_converter,
    prepare_geometry,
    prepare_lattice,
)
from app.core.analysis import Field, line_flux
from app.core.errors import ValidationError
from app.core.optimize import (
    GradientMode,
    OptimizationProblem,
    OptimizerParams,
    OptimizerState,
    optimize,
    trace_rows,
)
from app.core.ostream import get_logger
from app.core.output import ensure_dir, write_csv

logger = get_logger("Optimizer")


# =============================================================================
# OPTIMIZER SETTINGS
# =============================================================================

def optimizer_params(config: CaseConfig) -> OptimizerParams:
    section = "Optimization."
    condition = config.get_str(section + "StepCondition", None)
    return OptimizerParams(
        method=config.get_str(section + "Method", "LBFGS"),
        max_iter=config.get_int(section + "MaxIter", 100),
        max_step_attempts=config.get_int(section + "MaxStepAttempts", 20),
        tolerance=config.get_float(section + "Tolerance", 1e-10),
        control_tolerance=config.get_float(section + "ControlTolerance", 0.0),
        lam=config.get_float(section + "Lambda", 1.0),
        memory=config.get_int(section + "L", 20),
        step_condition=condition,
        fail_on_max_iter=config.get_bool(section + "FailOnMaxIter", True),
        verbose=config.get_bool(section + "Verbose", False),
    )


def _bounds(config: CaseConfig, dim: int):
    """Scalar bounds unless VectorBounds is set, then one bound per control."""
    section = "Optimization."
    vector = config.get_bool(section + "VectorBounds", False)
    bounds = []
    for key in ("LowerBound", "UpperBound"):
        full = section + key
        if full not in config.tree:
            bounds.append(None)
        elif vector:
            values = config.get_list(full)
            if len(values) != dim:
                raise ValidationError(f"{full} needs {dim} values, got {len(values)}")
            bounds.append(values)
        else:
            bounds.append(config.get_float(full))
    return bounds


def make_problem(config: CaseConfig, objective: Callable, dim: int,
                 gradient: Optional[Callable] = None,
                 default_mode: str = "FDQ") -> OptimizationProblem:
    lower, upper = _bounds(config, dim)
    return OptimizationProblem(
        objective=objective,
        dim=dim,
        gradient=gradient,
        gradient_mode=GradientMode(config.get_str("Optimization.GradientMode", default_mode)),
        fd_step=config.get_float("Optimization.FdStep", 1e-6),
        lower=lower,
        upper=upper,
        workers=config.get_int("Optimization.Workers", 1),
    )


def start_value(config: CaseConfig, default: List[float]) -> np.ndarray:
    values = config.get_list("Optimization.StartValue", default)
    if len(values) != len(default):
        raise ValidationError(f"StartValue needs {len(default)} values, got {len(values)}")
    return np.array(values, dtype=np.float64)


def _finish(config: CaseConfig, report: CaseReport, problem: OptimizationProblem,
            state: OptimizerState) -> None:
    header, rows = trace_rows(state)
    directory = ensure_dir(config.output_dir)
    path = write_csv(rows, header, directory / "optimizerTrace.csv")
    report.files.append(str(path))
    report.converged = state.converged
    report.convergence_step = state.iteration
    report.extra.update({
        "control": state.control.tolist(),
        "objective": state.value,
        "gradientNorm": state.grad_norm,
        "iterations": state.iteration,
        "evaluations": problem.evaluations,
        "trace": [[row[0], row[1], row[2]] for row in rows],
    })


# =============================================================================
# ROSENBROCK
# =============================================================================

def rosenbrock(alpha: np.ndarray) -> float:
    return float((1.0 - alpha[0]) ** 2 + 100.0 * (alpha[1] - alpha[0] ** 2) ** 2)


def rosenbrock_gradient(alpha: np.ndarray) -> np.ndarray:
    return np.array([
        -2.0 * (1.0 - alpha[0]) - 400.0 * alpha[0] * (alpha[1] - alpha[0] ** 2),
        200.0 * (alpha[1] - alpha[0] ** 2),
    ])


def run_rosenbrock(config: CaseConfig) -> CaseReport:
    params = optimizer_params(config)
    problem = make_problem(config, rosenbrock, 2, rosenbrock_gradient, default_mode="Provided")
    report = CaseReport(case=config.name, mode=params.method.value)
    state = optimize(problem, params, start_value(config, [-1.2, 1.0]))
    _finish(config, report, problem, state)
    report.rows.append({"iterations": state.iteration, "objective": state.value,
                        "alpha0": state.control[0], "alpha1": state.control[1]})
    return report


# =============================================================================
# MASS FLOW IDENTIFICATION
# =============================================================================

class MassFlowIdentification:
    """Forward model m(a): channel flux for an inlet profile scaled by a."""

    def __init__(self, config: CaseConfig):
        self.config = config
        self.converter = make_poiseuille_converter(config)
        length = config.get_float("Application.PhysParameters.ChannelLength", 2.0)
        self.steps = self.converter.lattice_time(config.max_phys_time)
        self.geometry = prepare_geometry(self.converter, length, "InletOutlet")
        self.fluid = self.geometry.material_indicator([FLUID])
        self.inlet = self.geometry.material_indicator([INLET])
        self.line_x = self.geometry.origin[0] + (self.geometry.nx // 2) * self.converter.delta_x
        self.true_control = config.get_float("Optimization.TrueControl", 1.0)
        self.runs = 0
        self.target = self.mass_flow(self.true_control)
        if self.target == 0.0:
            raise ValidationError("Target mass flow is zero")

    def mass_flow(self, control: float) -> float:
        lattice = prepare_lattice(self.config, self.geometry, self.converter, "InletOutlet", 1.0)
        try:
            lattice.set_prescribed_velocity(
                self.inlet, inlet_profile(self.geometry, self.converter, control))
            for _ in range(self.steps):
                lattice.collide_and_stream()
            _, u = lattice.compute_moments()
        finally:
            lattice.close()
        self.runs += 1
        field = Field(self.converter.phys_velocity(u), self.geometry.origin,
                      self.converter.delta_x)
        return line_flux(field, (self.line_x, 0.0), (1, 0), self.fluid).flux

    def objective(self, alpha: np.ndarray) -> float:
        mismatch = (self.mass_flow(float(alpha[0])) - self.target) / self.target
        return 0.5 * mismatch ** 2


def run_poiseuille_identification(config: CaseConfig) -> CaseReport:
    params = optimizer_params(config)
    config.print_converter = False
    model = MassFlowIdentification(config)
    problem = make_problem(config, model.objective, 1, default_mode="CDQ")
    report = CaseReport(case=config.name, mode=params.method.value)
    state = optimize(problem, params, start_value(config, [0.5]))
    _finish(config, report, problem, state)

    recovered = float(state.control[0])
    error = abs(recovered - model.true_control) / abs(model.true_control)
    row: Dict[str, float] = {
        "iterations": state.iteration,
        "objective": state.value,
        "control": recovered,
        "trueControl": model.true_control,
        "relativeControlError": error,
        "targetMassFlow": model.target,
        "forwardRuns": model.runs,
    }
    report.rows.append(row)
    write_report_csv(report, config.output_dir / "identification.csv", list(row))
    logger.info(f"Recovered inlet scale {recovered:.8f} (truth {model.true_control}), "
                f"relative error {error:.3e}")
    return report
