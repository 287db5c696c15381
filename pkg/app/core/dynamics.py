#!/usr/bin/env python3
"""
Dynamics Kernels
Equilibria, moments and local collision operators on population blocks.

All kernels work on a (q, n) block of populations (n cells, one column per
cell) so the lattice can hand them any subset of cells gathered by tag.

Based on:
- Second-order Maxwellian expansion for the flow equilibrium
- First-order (linear) equilibrium for advection-diffusion
- BGK, TRT (magic parameter) and Guo forcing with half-force velocity shift
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Tuple

import numpy as np

from app.core.descriptor import DescriptorTable
from app.core.errors import StabilityError, ValidationError

# =============================================================================
# DYNAMICS TAGS
# =============================================================================


class DynamicsTag(IntEnum):
    NO_DYNAMICS = 0
    BGK = 1
    FORCED_BGK = 2
    TRT = 3
    ADE_BGK = 4
    BOUNCE_BACK = 5
    ZOU_HE_VELOCITY = 6
    ZOU_HE_PRESSURE = 7
    ADE_DIRICHLET = 8
    ADE_NEUMANN = 9
    ADE_ADIABATIC = 10

    @property
    def is_bulk(self) -> bool:
        return self in (DynamicsTag.BGK, DynamicsTag.FORCED_BGK,
                        DynamicsTag.TRT, DynamicsTag.ADE_BGK)

    @property
    def is_advection_diffusion(self) -> bool:
        return self in (DynamicsTag.ADE_BGK, DynamicsTag.ADE_DIRICHLET,
                        DynamicsTag.ADE_NEUMANN, DynamicsTag.ADE_ADIABATIC)


@dataclass(frozen=True)
class DynamicsParams:
    omega: float
    magic: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.omega < 2.0:
            raise StabilityError(f"Relaxation frequency omega={self.omega} outside (0, 2)")
        if not self.magic > 0:
            raise ValidationError(f"Magic parameter must be positive, got {self.magic}")

    @property
    def omega_minus(self) -> float:
        """Odd-part relaxation frequency of the TRT operator."""
        return 1.0 / (self.magic / (1.0 / self.omega - 0.5) + 0.5)


# =============================================================================
# EQUILIBRIA AND MOMENTS
# =============================================================================

def _cu(table: DescriptorTable, u: np.ndarray) -> np.ndarray:
    """c_i . u for every population, shape (q, ...)."""
    c = table.c_array.astype(np.float64)
    u = np.asarray(u, dtype=np.float64)
    return np.tensordot(c, u, axes=([1], [0]))


def _weights(table: DescriptorTable, ndim: int) -> np.ndarray:
    return table.w_array.reshape((table.q,) + (1,) * ndim)


def equilibrium_second_order(rho, u, table: DescriptorTable) -> np.ndarray:
    """
    f_eq_i = w_i rho [1 + cu/cs2 + cu^2/(2 cs2^2) - u^2/(2 cs2)].

    rho has shape (...) and u shape (2, ...); the result has shape (q, ...).
    """
    rho = np.asarray(rho, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    inv_cs2 = table.inv_cs2
    cu = _cu(table, u)
    usqr = u[0] ** 2 + u[1] ** 2
    w = _weights(table, rho.ndim)
    return w * rho * (1.0 + inv_cs2 * cu + 0.5 * inv_cs2 ** 2 * cu ** 2 - 0.5 * inv_cs2 * usqr)


def equilibrium_first_order(rho, u, table: DescriptorTable) -> np.ndarray:
    """g_eq_i = w_i rho (1 + c_i.u / cs2)."""
    rho = np.asarray(rho, dtype=np.float64)
    w = _weights(table, rho.ndim)
    return w * rho * (1.0 + table.inv_cs2 * _cu(table, u))


def compute_moments(f: np.ndarray, table: DescriptorTable,
                    force: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Density and velocity of a population block.

    With a force density F the velocity is shifted by half a force:
    u = (sum c f + F/2) / rho.
    """
    rho = f.sum(axis=0)
    j = np.tensordot(table.c_array.T.astype(np.float64), f, axes=([1], [0]))
    if force is not None:
        j = j + 0.5 * np.asarray(force, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = j / rho
    return rho, u


# =============================================================================
# COLLISION OPERATORS
# =============================================================================

def collide_bgk(f: np.ndarray, omega: float, table: DescriptorTable,
                rho: Optional[np.ndarray] = None,
                u: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Relax f in place towards the second-order equilibrium; returns (rho, u)."""
    if rho is None or u is None:
        rho, u = compute_moments(f, table)
    feq = equilibrium_second_order(rho, u, table)
    f *= 1.0 - omega
    f += omega * feq
    return rho, u


def collide_trt(f: np.ndarray, omega: float, magic: float,
                table: DescriptorTable) -> Tuple[np.ndarray, np.ndarray]:
    """Two-relaxation-time collision in place; even part with omega, odd part with omega-."""
    omega_minus = DynamicsParams(omega, magic).omega_minus
    rho, u = compute_moments(f, table)
    feq = equilibrium_second_order(rho, u, table)
    opp = table.opposite_array
    f_plus = 0.5 * (f + f[opp])
    f_minus = 0.5 * (f - f[opp])
    feq_plus = 0.5 * (feq + feq[opp])
    feq_minus = 0.5 * (feq - feq[opp])
    f -= omega * (f_plus - feq_plus) + omega_minus * (f_minus - feq_minus)
    return rho, u


def guo_source(u: np.ndarray, omega: float, force: np.ndarray,
               table: DescriptorTable) -> np.ndarray:
    """S_i = (1 - omega/2) w_i [(c_i - u)/cs2 + (c_i.u) c_i / cs2^2] . F"""
    u = np.asarray(u, dtype=np.float64)
    force = np.asarray(force, dtype=np.float64)
    inv_cs2 = table.inv_cs2
    c = table.c_array.astype(np.float64)
    cu = _cu(table, u)
    cf = _cu(table, force)
    uf = u[0] * force[0] + u[1] * force[1]
    w = _weights(table, u.ndim - 1)
    return (1.0 - 0.5 * omega) * w * (inv_cs2 * (cf - uf) + inv_cs2 ** 2 * cu * cf)


def apply_guo_force(f: np.ndarray, u: np.ndarray, omega: float, force: np.ndarray,
                    table: DescriptorTable) -> None:
    f += guo_source(u, omega, force, table)


def collide_forced_bgk(f: np.ndarray, omega: float, force: np.ndarray,
                       table: DescriptorTable) -> Tuple[np.ndarray, np.ndarray]:
    """BGK on the half-force shifted velocity followed by the Guo source term."""
    rho, u = compute_moments(f, table, force)
    collide_bgk(f, omega, table, rho, u)
    apply_guo_force(f, u, omega, force, table)
    return rho, u


def collide_ade_bgk(g: np.ndarray, omega: float, velocity: np.ndarray,
                    table: DescriptorTable) -> np.ndarray:
    """BGK towards the first-order equilibrium advected with an external velocity."""
    concentration = g.sum(axis=0)
    geq = equilibrium_first_order(concentration, velocity, table)
    g *= 1.0 - omega
    g += omega * geq
    return concentration
