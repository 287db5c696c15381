#!/usr/bin/env python3
"""
Lattice Descriptors
Velocity-set constants for the 2D lattices used by the kit.

Based on:
- D2Q9 listing (velocity order, weights, cs^2 = 1/3)
- Standard isotropic D2Q5 set for BGK advection-diffusion (w0 = 1/3, w_side = 1/6)

Weights are exact rationals; lattices convert them to float once at
construction so the moment identities can be checked exactly here.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import List, Tuple

import numpy as np

from app.core.errors import ValidationError

# =============================================================================
# VELOCITY SET CONSTANTS
# =============================================================================


class LatticeName(str, Enum):
    D2Q9 = "D2Q9"
    D2Q5 = "D2Q5"


_D2Q9_C = ((0, 0), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1))
_D2Q9_W = (
    Fraction(4, 9),
    Fraction(1, 36), Fraction(1, 9), Fraction(1, 36), Fraction(1, 9),
    Fraction(1, 36), Fraction(1, 9), Fraction(1, 36), Fraction(1, 9),
)
_D2Q9_OPPOSITE = (0, 5, 6, 7, 8, 1, 2, 3, 4)

_D2Q5_C = ((0, 0), (-1, 0), (0, -1), (1, 0), (0, 1))
_D2Q5_W = (Fraction(1, 3), Fraction(1, 6), Fraction(1, 6), Fraction(1, 6), Fraction(1, 6))
_D2Q5_OPPOSITE = (0, 3, 4, 1, 2)


# =============================================================================
# DESCRIPTOR TABLE
# =============================================================================

@dataclass(frozen=True)
class DescriptorTable:
    """Constant velocity-set data of one lattice."""
    name: str
    d: int
    q: int
    c: Tuple[Tuple[int, int], ...]
    w: Tuple[Fraction, ...]
    opposite: Tuple[int, ...]
    cs2: Fraction
    vicinity: int = 1

    @cached_property
    def c_array(self) -> np.ndarray:
        """Velocities as a (q, 2) integer array."""
        arr = np.array(self.c, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def w_array(self) -> np.ndarray:
        arr = np.array([float(wi) for wi in self.w], dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def opposite_array(self) -> np.ndarray:
        arr = np.array(self.opposite, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @property
    def cs2_float(self) -> float:
        return float(self.cs2)

    @property
    def inv_cs2(self) -> float:
        return float(1 / self.cs2)

    def index_of(self, velocity: Tuple[int, int]) -> int:
        """Population index of a discrete velocity."""
        try:
            return self.c.index(tuple(int(v) for v in velocity))
        except ValueError:
            raise ValidationError(f"{self.name} has no velocity {tuple(velocity)}") from None


@dataclass(frozen=True)
class DescriptorViolation:
    identity: str
    detail: str


# =============================================================================
# OPERATIONS
# =============================================================================

@lru_cache(maxsize=None)
def descriptor_data(name: str) -> DescriptorTable:
    """
    Return the constant table of a supported lattice.

    Args:
        name: "D2Q9" or "D2Q5" (a LatticeName works too)

    Returns:
        DescriptorTable, the same object on every call
    """
    key = name.value if isinstance(name, LatticeName) else str(name).upper()
    if key == LatticeName.D2Q9.value:
        return DescriptorTable("D2Q9", 2, 9, _D2Q9_C, _D2Q9_W, _D2Q9_OPPOSITE, Fraction(1, 3))
    if key == LatticeName.D2Q5.value:
        return DescriptorTable("D2Q5", 2, 5, _D2Q5_C, _D2Q5_W, _D2Q5_OPPOSITE, Fraction(1, 3))
    raise ValidationError(
        f"Unsupported lattice: {name}. Available: {[n.value for n in LatticeName]}"
    )


def validate_descriptor(table: DescriptorTable) -> List[DescriptorViolation]:
    """
    Check the moment identities of a table in exact rational arithmetic.

    Returns an empty list when every identity holds; otherwise one entry per
    failing identity (weight-sum, first-moment, second-moment,
    opposite-pairing, opposite-weight, velocity-range, vicinity).
    """
    report: List[DescriptorViolation] = []
    w = [Fraction(wi) for wi in table.w]
    c = table.c

    if len(c) != table.q or len(w) != table.q or len(table.opposite) != table.q:
        report.append(DescriptorViolation("size", f"expected {table.q} entries per list"))
        return report

    total = sum(w, Fraction(0))
    if total != 1:
        report.append(DescriptorViolation("weight-sum", f"sum(w) = {total}"))

    first = [sum((w[i] * c[i][a] for i in range(table.q)), Fraction(0)) for a in range(table.d)]
    if any(m != 0 for m in first):
        report.append(DescriptorViolation("first-moment", f"sum(w c) = {tuple(first)}"))

    for a in range(table.d):
        for b in range(table.d):
            m = sum((w[i] * c[i][a] * c[i][b] for i in range(table.q)), Fraction(0))
            expected = table.cs2 if a == b else Fraction(0)
            if m != expected:
                report.append(DescriptorViolation(
                    "second-moment", f"sum(w c_{a} c_{b}) = {m}, expected {expected}"))

    for i, j in enumerate(table.opposite):
        if not 0 <= j < table.q or tuple(-x for x in c[i]) != tuple(c[j]):
            report.append(DescriptorViolation("opposite-pairing", f"c[{j}] != -c[{i}]"))
        elif w[j] != w[i]:
            report.append(DescriptorViolation("opposite-weight", f"w[{j}] != w[{i}]"))

    for i, ci in enumerate(c):
        if any(abs(x) > 1 for x in ci):
            report.append(DescriptorViolation("velocity-range", f"c[{i}] = {ci}"))

    if table.vicinity != 1:
        report.append(DescriptorViolation("vicinity", f"vicinity = {table.vicinity}"))

    return report
