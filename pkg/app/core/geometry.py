#!/usr/bin/env python3
"""
Geometry Creation
Indicator primitives, the material-number grid and its rename operations.

Material numbers: 0 = exterior, 1 = fluid, >= 2 = boundaries.
Cell (ix, iy) sits at origin + dx * (ix, iy); membership is decided by
sampling cell centers.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import GeometryError, ValidationError
from app.core.ostream import get_logger

logger = get_logger("prepareGeometry")

MAX_MATERIAL = 255


# =============================================================================
# INDICATORS
# =============================================================================

class Indicator(ABC):
    """
    Closed 2D set described by a membership test.

    ``contains`` is vectorized: x and y may be scalars or arrays of the same
    shape. ``+`` is union, ``-`` difference and ``*`` intersection.
    """

    @abstractmethod
    def contains(self, x, y):
        """Boolean membership of the points (x, y)."""

    @abstractmethod
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper corner of the set."""

    def __call__(self, point: Sequence[float]) -> bool:
        return bool(self.contains(float(point[0]), float(point[1])))

    def __add__(self, other: "Indicator") -> "Indicator":
        return Union(self, other)

    def __sub__(self, other: "Indicator") -> "Indicator":
        return Difference(self, other)

    def __mul__(self, other: "Indicator") -> "Indicator":
        return Intersection(self, other)


@dataclass(frozen=True)
class Cuboid(Indicator):
    origin: Tuple[float, float]
    extent: Tuple[float, float]

    def __post_init__(self):
        if len(self.extent) != 2 or min(self.extent) <= 0:
            raise ValidationError(f"Cuboid extent must be positive, got {self.extent}")

    def contains(self, x, y):
        ox, oy = self.origin
        ex, ey = self.extent
        return (x >= ox) & (x <= ox + ex) & (y >= oy) & (y <= oy + ey)

    def bounding_box(self):
        lo = np.asarray(self.origin, dtype=float)
        return lo, lo + np.asarray(self.extent, dtype=float)


@dataclass(frozen=True)
class Circle(Indicator):
    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError(f"Circle radius must be positive, got {self.radius}")

    def contains(self, x, y):
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius ** 2

    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Union(Indicator):
    left: Indicator
    right: Indicator

    def contains(self, x, y):
        return self.left.contains(x, y) | self.right.contains(x, y)

    def bounding_box(self):
        a_lo, a_hi = self.left.bounding_box()
        b_lo, b_hi = self.right.bounding_box()
        return np.minimum(a_lo, b_lo), np.maximum(a_hi, b_hi)


@dataclass(frozen=True)
class Intersection(Indicator):
    left: Indicator
    right: Indicator

    def contains(self, x, y):
        return self.left.contains(x, y) & self.right.contains(x, y)

    def bounding_box(self):
        a_lo, a_hi = self.left.bounding_box()
        b_lo, b_hi = self.right.bounding_box()
        return np.maximum(a_lo, b_lo), np.minimum(a_hi, b_hi)


@dataclass(frozen=True)
class Difference(Indicator):
    left: Indicator
    right: Indicator

    def contains(self, x, y):
        return self.left.contains(x, y) & ~np.asarray(self.right.contains(x, y))

    def bounding_box(self):
        return self.left.bounding_box()


# =============================================================================
# MATERIAL GRID
# =============================================================================

@dataclass
class Geometry:
    """Single-block grid of material numbers."""
    nx: int
    ny: int
    origin: Tuple[float, float]
    delta_x: float
    materials: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise GeometryError(f"Grid must be at least 1x1, got {self.nx}x{self.ny}")
        if self.materials.shape != (self.nx, self.ny):
            raise GeometryError(
                f"Material grid shape {self.materials.shape} != ({self.nx}, {self.ny})")
        self.materials = np.asarray(self.materials, dtype=np.uint8)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nx, self.ny

    def physical_position(self, ix, iy):
        return (self.origin[0] + self.delta_x * np.asarray(ix),
                self.origin[1] + self.delta_x * np.asarray(iy))

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Physical coordinates of all cells as two (nx, ny) arrays."""
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        return self.physical_position(ix, iy)

    def count(self, material: int) -> int:
        return int(np.count_nonzero(self.materials == material))

    def material_counts(self) -> dict:
        values, counts = np.unique(self.materials, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def copy(self) -> "Geometry":
        return Geometry(self.nx, self.ny, self.origin, self.delta_x, self.materials.copy())

    # ---- rename -------------------------------------------------------------

    def rename(self, from_m: int, to_m: int, offset: Optional[Sequence[int]] = None,
               condition: Optional[Indicator] = None, test_m: Optional[int] = None,
               test_direction: Optional[Sequence[int]] = None) -> "Geometry":
        """
        Replace one material with another, optionally restricted.

        Exactly one of ``offset``, ``condition`` or the pair
        (``test_m``, ``test_direction``) may be given; with none of them every
        ``from_m`` cell becomes ``to_m``.
        """
        _check_material(from_m)
        _check_material(to_m)
        chosen = sum(x is not None for x in (offset, condition, test_direction))
        if chosen > 1:
            raise ValidationError("rename takes at most one of offset/condition/testDirection")

        selected = self.materials == from_m
        if offset is not None:
            selected &= self._offset_mask(from_m, to_m, offset)
        elif condition is not None:
            x, y = self.cell_centers()
            selected &= np.asarray(condition.contains(x, y), dtype=bool)
        elif test_direction is not None:
            if test_m is None:
                raise ValidationError("rename with testDirection needs testM")
            _check_material(test_m)
            selected &= self._direction_mask(test_m, test_direction)

        self.materials[selected] = to_m
        return self

    def _offset_mask(self, from_m: int, to_m: int, offset: Sequence[int]) -> np.ndarray:
        ox, oy = (int(abs(v)) for v in offset[:2])
        ok = (self.materials == from_m) | (self.materials == to_m)
        # cells outside the grid count as failing the test
        padded = np.zeros((self.nx + 2 * ox, self.ny + 2 * oy), dtype=bool)
        padded[ox:ox + self.nx, oy:oy + self.ny] = ok
        mask = np.ones((self.nx, self.ny), dtype=bool)
        for dx in range(-ox, ox + 1):
            for dy in range(-oy, oy + 1):
                mask &= padded[ox + dx:ox + dx + self.nx, oy + dy:oy + dy + self.ny]
        return mask

    def _direction_mask(self, test_m: int, direction: Sequence[int]) -> np.ndarray:
        mask = np.ones((self.nx, self.ny), dtype=bool)
        for scale in (1, 2):
            mask &= self._shifted_equals(test_m, scale * int(direction[0]),
                                         scale * int(direction[1]))
        return mask

    def _shifted_equals(self, material: int, sx: int, sy: int) -> np.ndarray:
        """out[ix, iy] = materials[ix+sx, iy+sy] == material, False off-grid."""
        out = np.zeros((self.nx, self.ny), dtype=bool)
        src_x = slice(max(sx, 0), self.nx + min(sx, 0))
        dst_x = slice(max(-sx, 0), self.nx + min(-sx, 0))
        src_y = slice(max(sy, 0), self.ny + min(sy, 0))
        dst_y = slice(max(-sy, 0), self.ny + min(-sy, 0))
        out[dst_x, dst_y] = self.materials[src_x, src_y] == material
        return out

    def material_indicator(self, materials: Iterable[int]) -> np.ndarray:
        """Boolean (nx, ny) mask of cells whose material is in the set."""
        return np.isin(self.materials, list(materials))


def _check_material(material: int) -> None:
    if not 0 <= int(material) <= MAX_MATERIAL:
        raise ValidationError(f"Material number {material} outside [0, {MAX_MATERIAL}]")


# =============================================================================
# OPERATIONS
# =============================================================================

def build_geometry(domain: Indicator, delta_x: float, padding: int = 0) -> Geometry:
    """
    Voxelize an indicator onto a regular grid.

    Cells whose centers lie in the domain get material 2, all others 0.

    Args:
        domain: indicator describing the simulation domain
        delta_x: cell size in m
        padding: ring of extra material-0 cells around the bounding box

    Returns:
        Geometry covering the bounding box plus padding
    """
    if not delta_x > 0:
        raise ValidationError(f"deltaX must be positive, got {delta_x}")
    if padding < 0:
        raise ValidationError(f"padding must be non-negative, got {padding}")
    lo, hi = domain.bounding_box()
    extent = hi - lo
    if np.any(extent <= 0):
        raise GeometryError("Domain bounding box is empty")

    nx = int(math.ceil(extent[0] / delta_x - 1e-9)) + 2 * padding
    ny = int(math.ceil(extent[1] / delta_x - 1e-9)) + 2 * padding
    origin = (float(lo[0] + 0.5 * delta_x - padding * delta_x),
              float(lo[1] + 0.5 * delta_x - padding * delta_x))
    geometry = Geometry(nx, ny, origin, delta_x, np.zeros((nx, ny), dtype=np.uint8))
    x, y = geometry.cell_centers()
    inside = np.asarray(domain.contains(x, y), dtype=bool)
    if not inside.any():
        raise GeometryError("Domain indicator contains no cell centers")
    geometry.materials[inside] = 2
    logger.info(f"Prepare Geometry: {nx}x{ny} cells, dx={delta_x:g}, "
                f"{int(inside.sum())} cells inside domain")
    return geometry
