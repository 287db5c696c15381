#!/usr/bin/env python3
"""
Boundary Methods
Full-way bounce-back, Zou-He wet-node velocity/pressure closures and the
Dirichlet, Neumann and adiabatic advection-diffusion walls.

Based on:
- Zou & He non-equilibrium bounce-back with transverse momentum correction
- Link-wise full-way bounce-back (reflection replaces collision)
- Missing-population closures for D2Q5 advection-diffusion walls

Every kernel works on a (q, n) block of cells sharing one wall normal. The
normal is axis aligned and points into the fluid. Slots that streaming
filled from across the wall hold wrapped values; the closures below
overwrite exactly those slots.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.descriptor import DescriptorTable
from app.core.dynamics import DynamicsTag
from app.core.errors import GeometryError, SingularBoundaryError, ValidationError

SINGULAR_TOLERANCE = 1e-12

AXIS_NORMALS = ((1, 0), (-1, 0), (0, 1), (0, -1))


# =============================================================================
# BOUNDARY SPEC
# =============================================================================

@dataclass(frozen=True)
class BoundarySpec:
    """One boundary condition attached to all cells of a material."""
    kind: DynamicsTag
    material: int
    normal: Optional[Tuple[int, int]] = None
    rho: Optional[float] = None
    velocity: Optional[Tuple[float, float]] = None
    value: Optional[float] = None       # ADE wall value T
    flux: Optional[float] = None        # ADE Neumann payload (dx * flux)

    def __post_init__(self):
        kind = DynamicsTag(self.kind)
        if kind == DynamicsTag.NO_DYNAMICS or kind.is_bulk:
            raise ValidationError(f"{kind.name} is not a boundary kind")
        if kind != DynamicsTag.BOUNCE_BACK:
            check_normal(self.normal)
        if kind == DynamicsTag.ZOU_HE_VELOCITY and self.velocity is None:
            raise ValidationError("Zou-He velocity boundary needs a prescribed velocity")
        if kind == DynamicsTag.ZOU_HE_PRESSURE and self.rho is None:
            raise ValidationError("Zou-He pressure boundary needs a prescribed density")
        if kind == DynamicsTag.ADE_DIRICHLET and self.value is None:
            raise ValidationError("ADE Dirichlet boundary needs a prescribed value")


def check_normal(normal: Optional[Sequence[int]]) -> Tuple[int, int]:
    if normal is None or tuple(int(v) for v in normal) not in AXIS_NORMALS:
        raise ValidationError(f"Wall normal must be axis aligned, got {normal}")
    return int(normal[0]), int(normal[1])


def apply_boundary(lattice, geometry, spec: BoundarySpec) -> int:
    """
    Tag all cells of ``spec.material`` with the boundary dynamics and store
    the prescribed values. Returns the number of cells assigned.
    """
    mask = geometry.material_indicator([spec.material])
    kind = DynamicsTag(spec.kind)
    if kind == DynamicsTag.ADE_NEUMANN:
        _check_interior_neighbors(geometry, mask, spec.normal)
    lattice.define_dynamics(mask, kind, normal=spec.normal)
    if spec.rho is not None:
        lattice.set_prescribed_rho(mask, spec.rho)
    if spec.value is not None:
        lattice.set_prescribed_rho(mask, spec.value)
    if spec.velocity is not None:
        lattice.set_prescribed_velocity(mask, spec.velocity)
    if spec.flux is not None:
        lattice.set_field("BOUNDARY", mask, [spec.flux])
    return int(mask.sum())


def _check_interior_neighbors(geometry, mask: np.ndarray, normal) -> None:
    nx_, ny_ = check_normal(normal)
    ix, iy = np.nonzero(mask)
    jx, jy = ix + nx_, iy + ny_
    inside = (jx >= 0) & (jx < geometry.nx) & (jy >= 0) & (jy < geometry.ny)
    if not inside.all():
        raise GeometryError("Neumann wall cell has no interior neighbor along its normal")
    if np.any(geometry.materials[jx, jy] == 0):
        raise GeometryError("Neumann wall cell neighbor lies outside the domain")


# =============================================================================
# BOUNCE-BACK
# =============================================================================

def apply_bounce_back(f: np.ndarray, table: DescriptorTable) -> None:
    """f_i <-> f_opposite(i), in place of collision."""
    f[:] = f[table.opposite_array]


# =============================================================================
# ZOU-HE WET NODES (D2Q9)
# =============================================================================

def _link_sets(table: DescriptorTable, normal: Tuple[int, int]):
    c = table.c_array
    cn = c[:, 0] * normal[0] + c[:, 1] * normal[1]
    tangent = (-normal[1], normal[0])
    ct = c[:, 0] * tangent[0] + c[:, 1] * tangent[1]
    missing = np.nonzero(cn > 0)[0]
    outgoing = np.nonzero(cn < 0)[0]
    parallel = np.nonzero(cn == 0)[0]
    return missing, outgoing, parallel, tangent, ct


def _known_sums(f: np.ndarray, table: DescriptorTable, normal):
    _, outgoing, parallel, _, _ = _link_sets(table, normal)
    return f[parallel].sum(axis=0), f[outgoing].sum(axis=0)


def _reconstruct(f: np.ndarray, table: DescriptorTable, normal, rho, u) -> None:
    """Non-equilibrium bounce-back of the missing links plus tangential correction."""
    missing, _, parallel, tangent, ct = _link_sets(table, normal)
    inv_cs2 = table.inv_cs2
    w = table.w_array
    c = table.c_array
    opp = table.opposite_array
    u_t = u[0] * tangent[0] + u[1] * tangent[1]

    denom = float(np.sum(ct[missing] ** 2))
    if denom > 0:
        k = float(np.sum(2.0 * w[missing] * ct[missing] ** 2 * inv_cs2))
        n_t = (np.tensordot(ct[parallel].astype(np.float64), f[parallel], axes=(0, 0))
               + rho * u_t * (k - 1.0)) / denom
    else:
        n_t = 0.0

    for i in missing:
        cu = c[i, 0] * u[0] + c[i, 1] * u[1]
        f[i] = f[opp[i]] + 2.0 * w[i] * rho * cu * inv_cs2 - ct[i] * n_t


def zou_he_velocity(f: np.ndarray, table: DescriptorTable, normal: Sequence[int],
                    velocity: np.ndarray) -> np.ndarray:
    """
    Impose a wall velocity on a flat wall. Returns the wall density.

    rho = (sum_parallel f + 2 sum_outgoing f) / (1 - u.n)
    """
    normal = check_normal(normal)
    velocity = np.asarray(velocity, dtype=np.float64)
    u_n = velocity[0] * normal[0] + velocity[1] * normal[1]
    if np.any(np.abs(1.0 - u_n) < SINGULAR_TOLERANCE):
        raise SingularBoundaryError(f"Zou-He wall-normal velocity too close to 1: u_n={u_n}")
    parallel_sum, outgoing_sum = _known_sums(f, table, normal)
    rho = (parallel_sum + 2.0 * outgoing_sum) / (1.0 - u_n)
    _reconstruct(f, table, normal, rho, velocity)
    return rho


def zou_he_pressure(f: np.ndarray, table: DescriptorTable, normal: Sequence[int],
                    rho_wall) -> np.ndarray:
    """Impose a wall density; the wall-normal velocity follows from the known links."""
    normal = check_normal(normal)
    rho_wall = np.asarray(rho_wall, dtype=np.float64)
    if np.any(rho_wall <= 0):
        raise ValidationError("Zou-He pressure boundary needs a positive density")
    parallel_sum, outgoing_sum = _known_sums(f, table, normal)
    u_n = 1.0 - (parallel_sum + 2.0 * outgoing_sum) / rho_wall
    velocity = np.array([u_n * normal[0], u_n * normal[1]])
    _reconstruct(f, table, normal, rho_wall, velocity)
    return velocity


# =============================================================================
# ADVECTION-DIFFUSION WALLS (D2Q5)
# =============================================================================

def _missing_index(table: DescriptorTable, normal: Sequence[int]) -> int:
    if table.q != 5:
        raise ValidationError(f"ADE wall closures need D2Q5, got {table.name}")
    return table.index_of(check_normal(normal))


def ade_dirichlet(g: np.ndarray, table: DescriptorTable, normal: Sequence[int],
                  value) -> None:
    """Set the missing population so the zeroth moment equals the wall value."""
    i = _missing_index(table, normal)
    others = [k for k in range(table.q) if k != i]
    g[i] = np.asarray(value, dtype=np.float64) - g[others].sum(axis=0)


def ade_adiabatic(g: np.ndarray, table: DescriptorTable, normal: Sequence[int]) -> None:
    """Zero-flux wall: the missing population is copied from its opposite."""
    i = _missing_index(table, normal)
    g[i] = g[table.opposite_array[i]]


def ade_neumann_value(neighbor_value, payload, normal: Sequence[int]):
    """
    First-order one-sided wall value from the interior neighbor.

    Left/bottom walls (normal along +x/+y) use neighbor + payload, the
    opposite walls neighbor - payload; payload is dx * flux.
    """
    nx_, ny_ = check_normal(normal)
    sign = 1.0 if (nx_ + ny_) > 0 else -1.0
    return np.asarray(neighbor_value, dtype=np.float64) + sign * np.asarray(payload)


def ade_neumann(g: np.ndarray, table: DescriptorTable, normal: Sequence[int],
                neighbor_value, payload) -> np.ndarray:
    """Neumann wall: compute the wall value and close it like a Dirichlet wall."""
    value = ade_neumann_value(neighbor_value, payload, normal)
    ade_dirichlet(g, table, normal, value)
    return value
