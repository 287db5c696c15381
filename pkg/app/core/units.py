#!/usr/bin/env python3
"""
Unit Converter
Physical <-> lattice unit conversion for resolution / relaxation-time
parametrized simulations.

Based on:
- Diffusive scaling: dx = L/N, nu_L = cs^2 (tau - 1/2), dt = nu_L dx^2 / nu
- Lattice pressure p_LB = (rho - 1) cs^2 scaled by rho_phys dx^2 / dt^2
- ADE relaxation omega_AD = 1 / (D_L / cs^2_AD + 1/2)
"""

import math
from dataclasses import dataclass
from typing import Dict

from app.core.errors import StabilityError, ValidationError
from app.core.ostream import get_logger

logger = get_logger("UnitConverter")

CS2 = 1.0 / 3.0


# =============================================================================
# FLOW CONVERTER
# =============================================================================

@dataclass(frozen=True)
class UnitConverter:
    """Discretization of one flow problem; all derived values are fixed at construction."""
    resolution: int
    lattice_relaxation_time: float
    char_phys_length: float
    char_phys_velocity: float
    phys_viscosity: float
    phys_density: float
    delta_x: float
    delta_t: float
    lattice_viscosity: float
    omega: float
    char_lattice_velocity: float

    # ---- time ---------------------------------------------------------------

    def lattice_time(self, phys_time: float) -> int:
        """Nearest step count for a physical time; ties round half-up."""
        if phys_time < 0:
            raise ValidationError(f"Physical time must be non-negative, got {phys_time}")
        return int(math.floor(phys_time / self.delta_t + 0.5))

    def phys_time(self, steps: int) -> float:
        return steps * self.delta_t

    @property
    def char_phys_time(self) -> float:
        return self.char_phys_length / self.char_phys_velocity

    # ---- length / velocity --------------------------------------------------

    def lattice_length(self, phys_length: float) -> float:
        return phys_length / self.delta_x

    def phys_length(self, lattice_length: float) -> float:
        return lattice_length * self.delta_x

    def lattice_velocity(self, phys_velocity: float) -> float:
        return phys_velocity * self.delta_t / self.delta_x

    def phys_velocity(self, lattice_velocity: float) -> float:
        return lattice_velocity * self.delta_x / self.delta_t

    def lattice_acceleration(self, phys_acceleration: float) -> float:
        return phys_acceleration * self.delta_t ** 2 / self.delta_x

    def phys_acceleration(self, lattice_acceleration: float) -> float:
        return lattice_acceleration * self.delta_x / self.delta_t ** 2

    # ---- density / pressure -------------------------------------------------

    def lattice_density(self, phys_density: float) -> float:
        return phys_density / self.phys_density

    def phys_density_of(self, lattice_density: float) -> float:
        return lattice_density * self.phys_density

    @property
    def pressure_factor(self) -> float:
        return self.phys_density * (self.delta_x / self.delta_t) ** 2

    def phys_pressure(self, lattice_density: float) -> float:
        """Pressure in Pa of a lattice density, relative to the rest density 1."""
        if lattice_density <= 0:
            raise ValidationError(f"Lattice density must be positive, got {lattice_density}")
        return (lattice_density - 1.0) * CS2 * self.pressure_factor

    def lattice_pressure(self, phys_pressure: float) -> float:
        """Lattice density corresponding to a physical pressure."""
        return 1.0 + phys_pressure / (CS2 * self.pressure_factor)

    @property
    def reynolds_number(self) -> float:
        return self.char_phys_velocity * self.char_phys_length / self.phys_viscosity

    # ---- reporting ----------------------------------------------------------

    def summary(self) -> Dict[str, float]:
        return {
            "Resolution": self.resolution,
            "LatticeRelaxationTime": self.lattice_relaxation_time,
            "CharPhysLength": self.char_phys_length,
            "CharPhysVelocity": self.char_phys_velocity,
            "PhysViscosity": self.phys_viscosity,
            "PhysDensity": self.phys_density,
            "DeltaX": self.delta_x,
            "DeltaT": self.delta_t,
            "Omega": self.omega,
            "CharLatticeVelocity": self.char_lattice_velocity,
        }

    def print_summary(self) -> str:
        lines = [f"{key} = {value}" for key, value in self.summary().items()]
        for line in lines:
            logger.info(line)
        return "\n".join(lines)


def make_converter(
    resolution: int,
    lattice_relaxation_time: float,
    char_phys_length: float,
    char_phys_velocity: float,
    phys_viscosity: float,
    phys_density: float = 1.0,
) -> UnitConverter:
    """
    Build a converter from resolution and lattice relaxation time.

    Args:
        resolution: cells per characteristic length (N >= 1)
        lattice_relaxation_time: tau, must exceed 1/2
        char_phys_length: L in m
        char_phys_velocity: U in m/s
        phys_viscosity: nu in m^2/s
        phys_density: rho in kg/m^3

    Returns:
        UnitConverter with dx, dt, nu_L, omega and u_L derived
    """
    if isinstance(resolution, bool) or int(resolution) != resolution or resolution < 1:
        raise ValidationError(f"Resolution must be an integer >= 1, got {resolution}")
    if lattice_relaxation_time <= 0.5:
        raise StabilityError(
            f"Lattice relaxation time must exceed 0.5, got {lattice_relaxation_time}"
        )
    for name, value in (("CharPhysLength", char_phys_length),
                        ("CharPhysVelocity", char_phys_velocity),
                        ("PhysViscosity", phys_viscosity),
                        ("PhysDensity", phys_density)):
        if not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}")

    resolution = int(resolution)
    delta_x = char_phys_length / resolution
    lattice_viscosity = CS2 * (lattice_relaxation_time - 0.5)
    delta_t = lattice_viscosity * delta_x ** 2 / phys_viscosity
    return UnitConverter(
        resolution=resolution,
        lattice_relaxation_time=lattice_relaxation_time,
        char_phys_length=char_phys_length,
        char_phys_velocity=char_phys_velocity,
        phys_viscosity=phys_viscosity,
        phys_density=phys_density,
        delta_x=delta_x,
        delta_t=delta_t,
        lattice_viscosity=lattice_viscosity,
        omega=1.0 / lattice_relaxation_time,
        char_lattice_velocity=char_phys_velocity * delta_t / delta_x,
    )


# =============================================================================
# ADVECTION-DIFFUSION CONVERTER
# =============================================================================

@dataclass(frozen=True)
class AdeUnitConverter:
    base: UnitConverter
    phys_diffusivity: float
    lattice_diffusivity: float
    omega: float
    cs2: float

    @property
    def delta_x(self) -> float:
        return self.base.delta_x

    @property
    def delta_t(self) -> float:
        return self.base.delta_t

    def lattice_time(self, phys_time: float) -> int:
        return self.base.lattice_time(phys_time)

    def lattice_velocity(self, phys_velocity: float) -> float:
        return self.base.lattice_velocity(phys_velocity)

    def summary(self) -> Dict[str, float]:
        out = dict(self.base.summary())
        out.update({
            "PhysDiffusivity": self.phys_diffusivity,
            "LatticeDiffusivity": self.lattice_diffusivity,
            "OmegaAD": self.omega,
        })
        return out

    def print_summary(self) -> str:
        lines = [f"{key} = {value}" for key, value in self.summary().items()]
        for line in lines:
            logger.info(line)
        return "\n".join(lines)


def make_ade_converter(base: UnitConverter, phys_diffusivity: float,
                       cs2: float = CS2) -> AdeUnitConverter:
    """Derive the advection-diffusion relaxation from a flow discretization."""
    if not phys_diffusivity > 0:
        raise ValidationError(f"Diffusivity must be positive, got {phys_diffusivity}")
    if not cs2 > 0:
        raise ValidationError(f"cs2 must be positive, got {cs2}")
    lattice_diffusivity = phys_diffusivity * base.delta_t / base.delta_x ** 2
    omega = 1.0 / (lattice_diffusivity / cs2 + 0.5)
    if not 0.0 < omega < 2.0:
        raise StabilityError(f"ADE relaxation frequency {omega} outside (0, 2)")
    return AdeUnitConverter(
        base=base,
        phys_diffusivity=phys_diffusivity,
        lattice_diffusivity=lattice_diffusivity,
        omega=omega,
        cs2=cs2,
    )
