#!/usr/bin/env python3
"""
Lid-Driven Cavity
Square box with bounce-back walls and a moving lid, run to a steady state.
"""

from typing import Tuple

import numpy as np

from app.cases.common import (
    CaseConfig,
    CaseReport,
    make_tracer,
    ramp_fraction,
    ramp_steps,
    restore,
    run_loop,
    write_heatmap,
    write_report_csv,
    write_snapshot,
)
from app.core.boundary import BoundarySpec, apply_boundary
from app.core.dynamics import DynamicsParams, DynamicsTag
from app.core.geometry import Cuboid, Geometry, build_geometry
from app.core.lattice import BlockLattice
from app.core.ostream import get_logger
from app.core.units import UnitConverter, make_converter

logger = get_logger("cavity2d")

FLUID, WALL, LID = 1, 2, 3

STATISTICS_COLUMNS = ["N", "deltaX", "steps", "densityDrift", "maxVelocity"]


def prepare_geometry(converter: UnitConverter) -> Geometry:
    """(N + 1)^2 nodes; outer ring walls, top row without corners is the lid."""
    dx = converter.delta_x
    length = converter.char_phys_length
    geometry = build_geometry(Cuboid((-dx / 2, -dx / 2), (length + dx, length + dx)), dx)
    geometry.rename(WALL, FLUID, offset=(1, 1))
    geometry.rename(WALL, LID, condition=Cuboid((dx / 2, length - dx / 2), (length - dx, dx)))
    logger.info(f"Prepare Geometry ... OK {geometry.material_counts()}")
    return geometry


def simulate(config: CaseConfig) -> Tuple[CaseReport, BlockLattice, Geometry, UnitConverter]:
    params = "Application.PhysParameters."
    converter = make_converter(
        config.resolution,
        config.relaxation_time,
        config.get_float(params + "CharPhysLength", 1.0),
        config.get_float(params + "CharPhysVelocity", 1.0),
        config.get_float(params + "PhysViscosity", 0.01),
        config.get_float(params + "PhysDensity", 1.0),
    )
    if config.print_converter:
        converter.print_summary()
    lid_velocity = converter.lattice_velocity(
        config.get_float(params + "LidVelocity", converter.char_phys_velocity))

    geometry = prepare_geometry(converter)
    lattice = BlockLattice("D2Q9", geometry.nx, geometry.ny, DynamicsParams(converter.omega),
                           fields=(), collision_workers=config.collision_workers)
    lattice.define_dynamics(geometry.material_indicator([FLUID]), DynamicsTag.BGK)
    apply_boundary(lattice, geometry, BoundarySpec(DynamicsTag.BOUNCE_BACK, WALL))
    apply_boundary(lattice, geometry, BoundarySpec(
        DynamicsTag.ZOU_HE_VELOCITY, LID, normal=(0, -1), velocity=(0.0, 0.0)))
    lattice.ini_equilibrium(1.0, (0.0, 0.0))
    restore(config, lattice)

    report = CaseReport(case=config.name, mode="BGK")
    lid = geometry.material_indicator([LID])
    ramp = ramp_steps(config, converter)
    update_every = max(converter.lattice_time(config.boundary_update_time), 1)

    def set_lid(step: int) -> None:
        if step % update_every == 0 and step <= ramp + update_every:
            lattice.set_prescribed_velocity(lid, (lid_velocity * ramp_fraction(step, ramp), 0.0))

    def save(step: int) -> None:
        write_snapshot(config, lattice, converter, geometry.origin, report.files)

    lattice.set_prescribed_velocity(lid, (lid_velocity * ramp_fraction(lattice.step, ramp), 0.0))
    result = run_loop(config, lattice, converter, converter.lattice_time(config.max_phys_time),
                      before_step=set_lid, on_save=save,
                      tracer=make_tracer(config, converter), check_from=ramp)

    fluid = geometry.material_indicator([FLUID])
    rho, u = lattice.compute_moments()
    speed = np.hypot(u[0], u[1])
    report.rows.append({
        "N": converter.resolution,
        "deltaX": converter.delta_x,
        "steps": lattice.step,
        "densityDrift": float(rho[fluid].mean() - 1.0),
        "maxVelocity": float(converter.phys_velocity(speed[fluid].max())),
    })
    report.converged = result["converged"]
    report.convergence_step = lattice.step if result["converged"] else None
    report.wall_clock = result["wall_clock"]
    report.files.extend(result["files"])
    report.extra["mlups"] = result["mlups"]
    return report, lattice, geometry, converter


def run_cavity2d(config: CaseConfig) -> CaseReport:
    report, lattice, geometry, converter = simulate(config)
    try:
        _, u = lattice.compute_moments()
        write_snapshot(config, lattice, converter, geometry.origin, report.files)
        write_heatmap(config, np.hypot(u[0], u[1]), lattice.step, report.files)
        write_report_csv(report, config.output_dir / "cavityStatistics.csv", STATISTICS_COLUMNS)
    finally:
        lattice.close()
    row = report.rows[-1]
    logger.info(f"N={row['N']}: converged={report.converged} after {row['steps']} steps, "
                f"density drift {row['densityDrift']:.3e}")
    return report
