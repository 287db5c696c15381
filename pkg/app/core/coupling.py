#!/usr/bin/env python3
"""
Lattice Coupling
Transfer between the flow lattice and the advection-diffusion lattice.

- Velocity coupling: the ADE VELOCITY field follows the flow velocity.
- Boussinesq coupling: buoyancy force F = g * rho (T - T0) / dT * e_g on the flow.

The driver runs flow step -> coupling -> ADE step each time step.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.core.dynamics import DynamicsTag
from app.core.errors import ShapeMismatchError, ValidationError
from app.core.lattice import BlockLattice


@dataclass(frozen=True)
class BoussinesqParams:
    gravity: float
    t0: float
    delta_t: float
    direction: Tuple[float, float] = (0.0, -1.0)

    def __post_init__(self):
        if self.delta_t == 0:
            raise ValidationError("Boussinesq temperature difference must be non-zero")
        if abs(float(np.hypot(*self.direction)) - 1.0) > 1e-12:
            raise ValidationError(f"Gravity direction must be a unit vector, got {self.direction}")


def _check_shapes(nse: BlockLattice, ade: BlockLattice) -> None:
    if nse.shape != ade.shape:
        raise ShapeMismatchError(f"Flow lattice {nse.shape} and ADE lattice {ade.shape} differ")


def _default_mask(nse: BlockLattice) -> np.ndarray:
    return nse.tag_mask(DynamicsTag.BGK, DynamicsTag.FORCED_BGK, DynamicsTag.TRT)


def couple_velocity(nse: BlockLattice, ade: BlockLattice,
                    mask: Optional[np.ndarray] = None) -> BlockLattice:
    """Copy the (force-shifted) flow velocity into the ADE VELOCITY field."""
    _check_shapes(nse, ade)
    if mask is None:
        mask = _default_mask(nse)
    _, u = nse.compute_moments()
    ade.field("VELOCITY")[:, mask] = u[:, mask]
    return ade


def couple_boussinesq(nse: BlockLattice, ade: BlockLattice, params: BoussinesqParams,
                      mask: Optional[np.ndarray] = None) -> BlockLattice:
    """Set the flow FORCE field from the local temperature deviation."""
    _check_shapes(nse, ade)
    if mask is None:
        mask = _default_mask(nse)
    rho = nse.density()
    temperature = ade.density()
    scale = params.gravity * rho * (temperature - params.t0) / params.delta_t
    force = nse.field("FORCE")
    force[0, mask] = (scale * params.direction[0])[mask]
    force[1, mask] = (scale * params.direction[1])[mask]
    return nse
