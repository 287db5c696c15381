#!/usr/bin/env python3
"""
Porous Plate
Couette flow between two plates with constant wall-normal injection and
heat transfer from the hot lower plate to the cold upper plate.

Based on:
- Injection Reynolds number Re = v L / nu, Peclet number Pr Re
- u_x(y) = u0 (e^{Re y/L} - 1) / (e^{Re} - 1)
- T(y)  = T_h + (T_c - T_h) (e^{Pr Re y/L} - 1) / (e^{Pr Re} - 1)
- Relative global error E = sqrt(sum |a - a_ref|^2) / sqrt(sum |a_ref|^2)

The flow lattice hands its velocity to the temperature lattice every
step; a non-zero gravity adds the Boussinesq feedback.
"""

from typing import Dict

import numpy as np

from app.cases.common import (
    CaseConfig,
    CaseReport,
    convergence_value,
    every,
    log_statistics,
    make_tracer,
    maybe_checkpoint,
    Timer,
    write_heatmap,
    write_report_csv,
    write_snapshot,
)
from app.core.analysis import ValueTracer, error_norm, porous_plate_analytic
from app.core.boundary import BoundarySpec, apply_boundary
from app.core.coupling import BoussinesqParams, couple_boussinesq, couple_velocity
from app.core.dynamics import DynamicsParams, DynamicsTag
from app.core.errors import ValidationError
from app.core.geometry import Cuboid, Geometry, build_geometry
from app.core.lattice import BlockLattice
from app.core.ostream import get_logger
from app.core.units import AdeUnitConverter, UnitConverter, make_ade_converter, make_converter

logger = get_logger("porousPlate2d")

FLUID, BOTTOM, TOP = 1, 3, 4

STRIP_WIDTH = 4

ERROR_COLUMNS = ["N", "deltaX", "steps", "velocityError", "temperatureError",
                 "profileCollapseGap"]


# =============================================================================
# SETUP
# =============================================================================

def prepare_geometry(converter: UnitConverter) -> Geometry:
    """Periodic strip of N + 1 node rows; plates on the first and last row."""
    dx = converter.delta_x
    length = converter.char_phys_length
    geometry = build_geometry(Cuboid((-dx / 2, -dx / 2), (STRIP_WIDTH * dx, length + dx)), dx)
    geometry.rename(2, BOTTOM, condition=Cuboid((-1.0, -dx / 2), (2.0 + length, dx)))
    geometry.rename(2, TOP, condition=Cuboid((-1.0, length - dx / 2), (2.0 + length, dx)))
    geometry.rename(2, FLUID)
    logger.info(f"Prepare Geometry ... OK {geometry.material_counts()}")
    return geometry


class PorousPlate:
    """Flow and temperature lattices of one porous plate run."""

    def __init__(self, config: CaseConfig):
        self.config = config
        params = "Application.PhysParameters."
        self.reynolds = config.get_float(params + "Reynolds", 2.0)
        self.prandtl = config.get_float(params + "Prandtl", 1.0)
        self.t_hot = config.get_float(params + "TemperatureHot", 1.0)
        self.t_cold = config.get_float(params + "TemperatureCold", 0.0)
        self.gravity = config.get_float(params + "Gravity", 0.0)

        self.converter = make_converter(
            config.resolution,
            config.relaxation_time,
            config.get_float(params + "CharPhysLength", 1.0),
            config.get_float(params + "CharPhysVelocity", 0.1),
            config.get_float(params + "PhysViscosity", 0.01),
            config.get_float(params + "PhysDensity", 1.0),
        )
        self.ade_converter: AdeUnitConverter = make_ade_converter(
            self.converter, self.converter.phys_viscosity / self.prandtl)
        if config.print_converter:
            self.ade_converter.print_summary()

        length = self.converter.char_phys_length
        self.injection = self.reynolds * self.converter.phys_viscosity / length
        self.geometry = prepare_geometry(self.converter)
        self.flow = self._flow_lattice()
        self.temperature = self._temperature_lattice()
        self.boussinesq = None
        if self.gravity != 0.0:
            self.boussinesq = BoussinesqParams(
                gravity=self.converter.lattice_acceleration(self.gravity),
                t0=0.5 * (self.t_hot + self.t_cold),
                delta_t=self.t_hot - self.t_cold,
            )

    # ---- lattices -----------------------------------------------------------

    def _wall_velocities(self):
        v = self.converter.lattice_velocity(self.injection)
        u0 = self.converter.char_lattice_velocity
        return (0.0, v), (u0, v)

    def _flow_lattice(self) -> BlockLattice:
        geometry = self.geometry
        lattice = BlockLattice("D2Q9", geometry.nx, geometry.ny,
                               DynamicsParams(self.converter.omega),
                               collision_workers=self.config.collision_workers)
        fluid = geometry.material_indicator([FLUID])
        bulk = DynamicsTag.FORCED_BGK if self.gravity != 0.0 else DynamicsTag.BGK
        lattice.define_dynamics(fluid, bulk)
        bottom, top = self._wall_velocities()
        apply_boundary(lattice, geometry, BoundarySpec(
            DynamicsTag.ZOU_HE_VELOCITY, BOTTOM, normal=(0, 1), velocity=bottom))
        apply_boundary(lattice, geometry, BoundarySpec(
            DynamicsTag.ZOU_HE_VELOCITY, TOP, normal=(0, -1), velocity=top))

        # linear shear start with the injected wall-normal velocity
        _, y = geometry.cell_centers()
        s = np.clip(y / self.converter.char_phys_length, 0.0, 1.0)
        velocity = np.stack([top[0] * s, np.full(geometry.shape, bottom[1])])
        lattice.ini_equilibrium(1.0, velocity)
        return lattice

    def _temperature_lattice(self) -> BlockLattice:
        geometry = self.geometry
        lattice = BlockLattice("D2Q5", geometry.nx, geometry.ny,
                               DynamicsParams(self.ade_converter.omega),
                               fields=("VELOCITY",),
                               collision_workers=self.config.collision_workers)
        lattice.define_dynamics(geometry.material_indicator([FLUID]), DynamicsTag.ADE_BGK)
        bottom, top = self._wall_velocities()
        apply_boundary(lattice, geometry, BoundarySpec(
            DynamicsTag.ADE_DIRICHLET, BOTTOM, normal=(0, 1), value=self.t_hot))
        apply_boundary(lattice, geometry, BoundarySpec(
            DynamicsTag.ADE_DIRICHLET, TOP, normal=(0, -1), value=self.t_cold))
        lattice.set_field("VELOCITY", geometry.material_indicator([BOTTOM]), bottom)
        lattice.set_field("VELOCITY", geometry.material_indicator([TOP]), top)
        couple_velocity(self.flow, lattice)

        _, y = geometry.cell_centers()
        s = np.clip(y / self.converter.char_phys_length, 0.0, 1.0)
        lattice.ini_equilibrium(self.t_hot + (self.t_cold - self.t_hot) * s,
                                lattice.field("VELOCITY"), order=1)
        return lattice

    # ---- evolution ----------------------------------------------------------

    def step(self) -> None:
        self.flow.collide_and_stream()
        couple_velocity(self.flow, self.temperature)
        self.temperature.collide_and_stream()
        if self.boussinesq is not None:
            couple_boussinesq(self.flow, self.temperature, self.boussinesq)

    def errors(self) -> Dict[str, float]:
        """Relative global errors of u_x and T over the interior rows."""
        _, y = self.geometry.cell_centers()
        u_ref, t_ref = porous_plate_analytic(
            y, self.converter.char_phys_length, self.reynolds, self.prandtl,
            self.converter.char_phys_velocity, self.t_hot, self.t_cold - self.t_hot)
        mask = self.geometry.material_indicator([FLUID])
        _, u = self.flow.compute_moments()
        ux = self.converter.phys_velocity(u[0])
        temperature = self.temperature.density()

        u_norm = ux / self.converter.char_phys_velocity
        t_norm = (temperature - self.t_hot) / (self.t_cold - self.t_hot)
        return {
            "velocityError": error_norm(ux, u_ref, mask, "L2", relative=True),
            "temperatureError": error_norm(temperature, t_ref, mask, "L2", relative=True),
            "profileCollapseGap": float(np.max(np.abs(u_norm - t_norm)[mask])),
        }

    def close(self) -> None:
        self.flow.close()
        self.temperature.close()


# =============================================================================
# RUN
# =============================================================================

def run_porous_plate_2d(config: CaseConfig) -> CaseReport:
    if config.restart is not None:
        raise ValidationError("porousPlate2d couples two lattices and cannot restart "
                              "from a single checkpoint")
    plate = PorousPlate(config)
    converter = plate.converter
    report = CaseReport(case=config.name, mode="Boussinesq" if plate.boussinesq else "OneWay")
    energy_tracer = make_tracer(config, converter)
    temperature_tracer = ValueTracer(energy_tracer.window, config.residuum)

    max_steps = converter.lattice_time(config.max_phys_time)
    save_every = every(config.save_time, converter)
    checkpoint_every = every(config.checkpoint_time, converter)
    timer = Timer(max_steps, 2 * plate.flow.cell_count)
    files = report.files

    try:
        while plate.flow.step < max_steps:
            plate.step()
            energy_tracer.update(convergence_value(plate.flow, config.convergence_type))
            temperature_tracer.update(plate.temperature.statistics.average_rho)
            step = plate.flow.step
            if save_every and step % save_every == 0:
                timer.print_step(step)
                log_statistics(plate.flow, converter)
                write_snapshot(config, plate.flow, converter, plate.geometry.origin, files,
                               extra={"temperature": plate.temperature.density()})
            maybe_checkpoint(config, plate.flow, checkpoint_every, files, config.name + "_flow")
            maybe_checkpoint(config, plate.temperature, checkpoint_every, files,
                             config.name + "_temperature")
            if energy_tracer.has_converged() and temperature_tracer.has_converged():
                report.converged = True
                report.convergence_step = step
                logger.info(f"Simulation converged at step {step} "
                            f"(t={converter.phys_time(step):.6g})")
                break
        timer.print_summary(plate.flow.step)

        row = {"N": converter.resolution, "deltaX": converter.delta_x, "steps": plate.flow.step}
        row.update(plate.errors())
        report.rows.append(row)
        write_snapshot(config, plate.flow, converter, plate.geometry.origin, files,
                       extra={"temperature": plate.temperature.density()})
        write_heatmap(config, plate.temperature.density(), plate.flow.step, files,
                      config.name + "_temperature")
        write_report_csv(report, config.output_dir / "porousPlateErrors.csv", ERROR_COLUMNS)
    finally:
        plate.close()

    report.wall_clock = timer.elapsed()
    report.extra["mlups"] = timer.mlups(plate.flow.step)
    logger.info(f"N={converter.resolution}: E_u={row['velocityError']:.6e}, "
                f"E_T={row['temperatureError']:.6e}")
    return report
