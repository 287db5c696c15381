#!/usr/bin/env python3
"""
Advection-Diffusion Convergence
Periodic sine pulse advected and diffused on [-1, 1] (1D strip) or
[-1, 1]^2, compared against the closed-form solution every step.

Based on:
- Diffusive scaling dt = dx^2 with tau = 3 mu + 1/2, so nu_L = mu
- chi(x, t) = sin(pi (x - u t)) exp(-mu pi^2 t)
- Run until the pulse amplitude has decayed below 10 %
"""

import math
from typing import List, Tuple

import numpy as np

from app.cases.common import (
    CaseConfig,
    CaseReport,
    restore,
    run_loop,
    write_heatmap,
    write_report_csv,
)
from app.core.analysis import Field, ade_analytic_1d, ade_analytic_2d, error_norm
from app.core.dynamics import DynamicsParams, DynamicsTag
from app.core.geometry import Cuboid, Geometry, build_geometry
from app.core.lattice import BlockLattice
from app.core.ostream import get_logger
from app.core.output import dump_name, ensure_dir, write_csv, write_vti
from app.core.units import AdeUnitConverter, make_ade_converter, make_converter

logger = get_logger("advectionDiffusion")

DOMAIN_LENGTH = 2.0
DECAY_TARGET = 0.1

ERROR_COLUMNS = ["N", "deltaX", "latticeVelocity", "steps", "averageL2RelError",
                 "finalL2RelError"]


# =============================================================================
# SETUP
# =============================================================================

def make_ade_case_converter(config: CaseConfig,
                            dimensions: int) -> Tuple[AdeUnitConverter, Tuple[float, float]]:
    """Diffusive scaling converter and the physical advection velocity."""
    mu = config.get_float("Application.PhysParameters.Diffusivity",
                          1.5 if dimensions == 1 else 0.05)
    peclet = config.get_float("Application.PhysParameters.PecletNumber",
                              40.0 / 3.0 if dimensions == 1 else 100.0)
    speed = peclet * mu / DOMAIN_LENGTH
    base = make_converter(config.resolution, 3.0 * mu + 0.5, DOMAIN_LENGTH,
                          max(speed, 1.0), mu)
    converter = make_ade_converter(base, mu)
    velocity = (speed, 0.0) if dimensions == 1 else (speed, speed)
    return converter, velocity


def prepare_geometry(converter: AdeUnitConverter, dimensions: int) -> Geometry:
    """Nodes at -1 + i dx; a single row of cells in 1D."""
    dx = converter.delta_x
    height = DOMAIN_LENGTH if dimensions == 2 else dx
    y0 = -1.0 - dx / 2 if dimensions == 2 else -dx / 2
    geometry = build_geometry(Cuboid((-1.0 - dx / 2, y0), (DOMAIN_LENGTH, height)), dx)
    geometry.rename(2, 1)
    return geometry


def analytic(geometry: Geometry, t: float, velocity, mu: float, dimensions: int) -> np.ndarray:
    x, y = geometry.cell_centers()
    if dimensions == 1:
        return ade_analytic_1d(x, t, velocity[0], mu)
    return ade_analytic_2d(x, y, t, velocity, mu)


def end_time(mu: float, dimensions: int) -> float:
    """Time at which the amplitude exp(-d mu pi^2 t) reaches 10 %."""
    return math.log(1.0 / DECAY_TARGET) / (dimensions * mu * math.pi ** 2)


# =============================================================================
# RUN
# =============================================================================

def simulate(config: CaseConfig, dimensions: int) -> CaseReport:
    converter, velocity = make_ade_case_converter(config, dimensions)
    if config.print_converter:
        converter.print_summary()
    mu = converter.phys_diffusivity
    geometry = prepare_geometry(converter, dimensions)

    lattice = BlockLattice("D2Q5", geometry.nx, geometry.ny, DynamicsParams(converter.omega),
                           fields=("VELOCITY",), collision_workers=config.collision_workers)
    bulk = geometry.material_indicator([1])
    lattice.define_dynamics(bulk, DynamicsTag.ADE_BGK)
    lattice_velocity = [converter.lattice_velocity(v) for v in velocity]
    lattice.set_field("VELOCITY", bulk, lattice_velocity)
    lattice.ini_equilibrium(analytic(geometry, 0.0, velocity, mu, dimensions),
                            lattice_velocity, order=1)
    restore(config, lattice)

    report = CaseReport(case=config.name, mode=f"{dimensions}d")
    initial_error = _relative_error(lattice, geometry, converter, velocity, mu, dimensions)
    errors: List[float] = []

    def observe(step: int) -> None:
        errors.append(_relative_error(lattice, geometry, converter, velocity, mu, dimensions))

    def save(step: int) -> None:
        _dump(config, lattice, geometry, converter, velocity, mu, dimensions, report.files)

    max_steps = converter.lattice_time(min(end_time(mu, dimensions), config.max_phys_time))
    try:
        result = run_loop(config, lattice, converter.base, max_steps,
                          after_step=observe, on_save=save)
    finally:
        lattice.close()

    average = float(np.mean(errors)) if errors else initial_error
    report.rows.append({
        "N": converter.base.resolution,
        "deltaX": converter.delta_x,
        "latticeVelocity": lattice_velocity[0],
        "steps": lattice.step,
        "averageL2RelError": average,
        "finalL2RelError": errors[-1] if errors else initial_error,
    })
    report.extra["initialL2RelError"] = initial_error
    report.extra["mlups"] = result["mlups"]
    report.wall_clock = result["wall_clock"]
    report.files.extend(result["files"])

    directory = ensure_dir(config.output_dir / "gnuplotData" / "data")
    path = write_csv([[k + 1, e] for k, e in enumerate(errors)], ["step", "L2RelError"],
                     directory / "averageL2RelError.csv")
    report.files.append(str(path))
    logger.info(f"N={converter.base.resolution}: average L2 relative error {average:.6e} "
                f"over {lattice.step} steps")
    return report


def _relative_error(lattice: BlockLattice, geometry: Geometry, converter: AdeUnitConverter,
                    velocity, mu: float, dimensions: int) -> float:
    t = converter.base.phys_time(lattice.step)
    reference = analytic(geometry, t, velocity, mu, dimensions)
    return error_norm(lattice.density(), reference, p="L2", relative=True,
                      delta_x=converter.delta_x)


def _dump(config: CaseConfig, lattice: BlockLattice, geometry: Geometry,
          converter: AdeUnitConverter, velocity, mu: float, dimensions: int,
          files: List[str]) -> None:
    t = converter.base.phys_time(lattice.step)
    concentration = lattice.density()
    fields = {
        "concentration": Field(concentration, geometry.origin, converter.delta_x),
        "analytic": Field(analytic(geometry, t, velocity, mu, dimensions),
                          geometry.origin, converter.delta_x),
    }
    path = ensure_dir(config.output_dir / "vtkData") / dump_name(config.name, lattice.step, "vti")
    write_vti(fields, path, geometry.origin, converter.delta_x)
    files.append(str(path))
    if dimensions == 2:
        write_heatmap(config, concentration, lattice.step, files)


def run_advection_diffusion_1d(config: CaseConfig) -> CaseReport:
    report = simulate(config, 1)
    write_report_csv(report, config.output_dir / "averageSimL2RelErr.csv", ERROR_COLUMNS)
    return report


def run_advection_diffusion_2d(config: CaseConfig) -> CaseReport:
    report = simulate(config, 2)
    write_report_csv(report, config.output_dir / "averageSimL2RelErr.csv", ERROR_COLUMNS)
    return report
