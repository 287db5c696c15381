#!/usr/bin/env python3
"""
Poiseuille Channel
Plane channel flow between two walls, driven either by a constant body
force on a periodic channel or by a velocity inlet / pressure outlet pair.

Based on:
- Steady profile u(y) = 4 u_max y (H - y) / H^2
- Body force F = 8 nu_L u_L / N^2 for the force-driven channel
- Inlet profile scaled by a smooth start-up ramp
"""

from typing import Dict, Tuple

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
from app.core.analysis import NormType, error_norm, poiseuille_profile
from app.core.boundary import BoundarySpec, apply_boundary
from app.core.dynamics import DynamicsParams, DynamicsTag
from app.core.errors import ValidationError
from app.core.geometry import Cuboid, Geometry, build_geometry
from app.core.lattice import BlockLattice
from app.core.ostream import get_logger
from app.core.units import UnitConverter, make_converter

logger = get_logger("poiseuille2d")

FLUID, WALL, INLET, OUTLET = 1, 2, 3, 4

MODES = ("ForceDriven", "InletOutlet")

ERROR_COLUMNS = ["N", "deltaX", "steps", "L1AbsError", "L1RelError", "L2AbsError",
                 "L2RelError", "LinfAbsError", "LinfRelError"]


# =============================================================================
# SETUP
# =============================================================================

def make_poiseuille_converter(config: CaseConfig, resolution: int = None) -> UnitConverter:
    return make_converter(
        resolution or config.resolution,
        config.relaxation_time,
        config.get_float("Application.PhysParameters.CharPhysLength", 1.0),
        config.get_float("Application.PhysParameters.CharPhysVelocity", 1.0),
        config.get_float("Application.PhysParameters.PhysViscosity", 0.1),
        config.get_float("Application.PhysParameters.PhysDensity", 1.0),
    )


def prepare_geometry(converter: UnitConverter, length: float, mode: str) -> Geometry:
    """
    Channel of height L with one wall layer above and below.

    Material 2 walls, 1 fluid; in InletOutlet mode the first and last
    fluid columns become 3 (inlet) and 4 (outlet).
    """
    dx = converter.delta_x
    height = converter.char_phys_length
    channel = Cuboid((0.0, -dx), (length, height + 2.0 * dx))
    geometry = build_geometry(channel, dx)
    geometry.rename(WALL, FLUID, condition=Cuboid((-1.0, 0.0), (length + 2.0, height)))
    if mode == "InletOutlet":
        x_first = geometry.origin[0]
        x_last = geometry.origin[0] + (geometry.nx - 1) * dx
        geometry.rename(FLUID, INLET, condition=Cuboid((x_first - dx / 2, 0.0), (dx, height)))
        geometry.rename(FLUID, OUTLET, condition=Cuboid((x_last - dx / 2, 0.0), (dx, height)))
    logger.info(f"Prepare Geometry ... OK {geometry.material_counts()}")
    return geometry


def wall_distance(geometry: Geometry) -> np.ndarray:
    """Physical y of every cell measured from the lower wall (y = 0)."""
    _, y = geometry.cell_centers()
    return y


def inlet_profile(geometry: Geometry, converter: UnitConverter, scale: float = 1.0) -> np.ndarray:
    """Lattice velocity (2, nx, ny) of the parabolic inflow."""
    profile = poiseuille_profile(wall_distance(geometry), converter.char_lattice_velocity,
                                 converter.char_phys_length)
    velocity = np.zeros((2,) + geometry.shape)
    velocity[0] = scale * profile
    return velocity


def prepare_lattice(config: CaseConfig, geometry: Geometry, converter: UnitConverter,
                    mode: str, force_factor: float) -> BlockLattice:
    lattice = BlockLattice("D2Q9", geometry.nx, geometry.ny,
                           DynamicsParams(converter.omega),
                           collision_workers=config.collision_workers)
    fluid = geometry.material_indicator([FLUID])
    if mode == "ForceDriven":
        lattice.define_dynamics(fluid, DynamicsTag.FORCED_BGK)
        force = force_factor * 8.0 * converter.lattice_viscosity \
            * converter.char_lattice_velocity / converter.resolution ** 2
        lattice.set_field("FORCE", fluid, [force, 0.0])
    else:
        lattice.define_dynamics(fluid, DynamicsTag.BGK)
        apply_boundary(lattice, geometry, BoundarySpec(
            DynamicsTag.ZOU_HE_VELOCITY, INLET, normal=(1, 0), velocity=(0.0, 0.0)))
        apply_boundary(lattice, geometry, BoundarySpec(
            DynamicsTag.ZOU_HE_PRESSURE, OUTLET, normal=(-1, 0), rho=1.0))
    apply_boundary(lattice, geometry, BoundarySpec(DynamicsTag.BOUNCE_BACK, WALL))
    lattice.ini_equilibrium(1.0, (0.0, 0.0))
    logger.info("Prepare Lattice ... OK")
    return lattice


# =============================================================================
# ERRORS
# =============================================================================

def velocity_errors(lattice: BlockLattice, geometry: Geometry, converter: UnitConverter,
                    max_velocity: float) -> Dict[str, float]:
    """Six velocity norms against the analytic profile over the fluid cells."""
    _, u = lattice.compute_moments()
    simulated = converter.phys_velocity(u)
    reference = np.zeros_like(simulated)
    reference[0] = poiseuille_profile(wall_distance(geometry), max_velocity,
                                      converter.char_phys_length)
    mask = geometry.material_indicator([FLUID])
    table = {}
    for p in NormType:
        absolute = error_norm(simulated, reference, mask, p, False, converter.delta_x)
        try:
            relative = error_norm(simulated, reference, mask, p, True, converter.delta_x)
        except ValidationError:
            # zero reference profile
            relative = 0.0 if absolute == 0.0 else float("inf")
        table[f"{p.value}AbsError"] = absolute
        table[f"{p.value}RelError"] = relative
    return table


# =============================================================================
# RUN
# =============================================================================

def simulate(config: CaseConfig) -> Tuple[CaseReport, BlockLattice, Geometry, UnitConverter]:
    mode = config.get_str("Application.Mode", "ForceDriven")
    if mode not in MODES:
        raise ValidationError(f"Unknown poiseuille2d mode {mode}. Available: {list(MODES)}")
    converter = make_poiseuille_converter(config)
    if config.print_converter:
        converter.print_summary()

    length = config.get_float("Application.PhysParameters.ChannelLength", 1.0)
    force_factor = config.get_float("Application.PhysParameters.ForceFactor", 1.0)
    geometry = prepare_geometry(converter, length, mode)
    lattice = prepare_lattice(config, geometry, converter, mode, force_factor)
    restore(config, lattice)

    report = CaseReport(case=config.name, mode=mode)
    origin = geometry.origin
    max_steps = converter.lattice_time(config.max_phys_time)
    ramp = ramp_steps(config, converter)
    update_every = max(converter.lattice_time(config.boundary_update_time), 1)
    inlet = geometry.material_indicator([INLET])
    max_velocity = converter.char_phys_velocity * (force_factor if mode == "ForceDriven" else 1.0)

    def set_inlet(step: int) -> None:
        if mode == "InletOutlet" and step % update_every == 0 and step <= ramp + update_every:
            scale = ramp_fraction(step, ramp)
            lattice.set_prescribed_velocity(inlet, inlet_profile(geometry, converter, scale))

    if mode == "InletOutlet":
        lattice.set_prescribed_velocity(
            inlet, inlet_profile(geometry, converter, ramp_fraction(lattice.step, ramp)))

    def save(step: int) -> None:
        write_snapshot(config, lattice, converter, origin, report.files)

    result = run_loop(config, lattice, converter, max_steps, before_step=set_inlet,
                      on_save=save, tracer=make_tracer(config, converter), check_from=ramp)

    errors = velocity_errors(lattice, geometry, converter, max_velocity)
    row = {"N": converter.resolution, "deltaX": converter.delta_x, "steps": lattice.step}
    row.update(errors)
    report.rows.append(row)
    report.converged = result["converged"]
    report.convergence_step = lattice.step if result["converged"] else None
    report.wall_clock = result["wall_clock"]
    report.files.extend(result["files"])
    report.extra["mlups"] = result["mlups"]
    logger.info(f"N={converter.resolution}: L2RelError={errors['L2RelError']:.6e}, "
                f"LinfRelError={errors['LinfRelError']:.6e}")
    return report, lattice, geometry, converter


def run_poiseuille2d(config: CaseConfig) -> CaseReport:
    report, lattice, geometry, converter = simulate(config)
    try:
        write_snapshot(config, lattice, converter, geometry.origin, report.files)
        _, u = lattice.compute_moments()
        write_heatmap(config, np.hypot(u[0], u[1]), lattice.step, report.files)
        write_report_csv(report, config.output_dir / "velocityErrors.csv", ERROR_COLUMNS)
    finally:
        lattice.close()
    return report
