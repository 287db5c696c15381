#!/usr/bin/env python3
"""
Analysis Functors
Analytical reference profiles, error norms, EOC regression, convergence
tracing, line fluxes and start-up scales.

Based on:
- Absolute/relative L1, L2 and Linf norms with cell measure dx^2
- EOC_ij = ln(E_i/E_j) / ln(h_i/h_j), slope by least squares in log-log space
- Windowed standard deviation convergence test sigma < eps * |mean|
"""

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import GeometryError, ValidationError

# =============================================================================
# FIELDS
# =============================================================================


@dataclass
class Field:
    """Snapshot of a scalar (1 component) or vector (2 components) field."""
    data: np.ndarray
    origin: Tuple[float, float] = (0.0, 0.0)
    delta_x: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3 or data.shape[0] not in (1, 2):
            raise ValidationError(f"Field data must be (nx, ny) or (2, nx, ny), got {data.shape}")
        self.data = data

    @property
    def components(self) -> int:
        return self.data.shape[0]

    @property
    def nx(self) -> int:
        return self.data.shape[1]

    @property
    def ny(self) -> int:
        return self.data.shape[2]

    def norm(self) -> np.ndarray:
        return np.sqrt((self.data ** 2).sum(axis=0))

    def index_of(self, point: Sequence[float]) -> Tuple[int, int]:
        ix = int(round((point[0] - self.origin[0]) / self.delta_x))
        iy = int(round((point[1] - self.origin[1]) / self.delta_x))
        return ix, iy


# =============================================================================
# ANALYTICAL PROFILES
# =============================================================================

def poiseuille_profile(y, max_velocity: float, height: float):
    """u(y) = 4 u_max y (H - y) / H^2, zero outside [0, H]."""
    y = np.asarray(y, dtype=np.float64)
    u = 4.0 * max_velocity * y * (height - y) / height ** 2
    return np.where((y < 0) | (y > height), 0.0, u)


def ade_analytic_1d(x, t: float, u: float, mu: float):
    return np.sin(np.pi * (np.asarray(x) - u * t)) * np.exp(-mu * np.pi ** 2 * t)


def ade_analytic_2d(x, y, t: float, u: Sequence[float], mu: float):
    return (np.sin(np.pi * (np.asarray(x) - u[0] * t))
            * np.sin(np.pi * (np.asarray(y) - u[1] * t))
            * np.exp(-2.0 * mu * np.pi ** 2 * t))


def _exp_ratio(y, length: float, exponent: float):
    s = np.asarray(y, dtype=np.float64) / length
    if exponent == 0:
        return s
    return np.expm1(exponent * s) / math.expm1(exponent)


def porous_plate_analytic(y, length: float, reynolds: float, prandtl: float,
                          u0: float, t_bottom: float, delta_t: float):
    """
    Steady profiles of the injected Couette flow with heat transfer.

    u_x(y) = u0 (e^{Re y/L} - 1) / (e^{Re} - 1)
    T(y)   = T_b + dT (e^{Pr Re y/L} - 1) / (e^{Pr Re} - 1)

    Re = 0 gives the linear conduction / Couette limit.
    """
    ux = u0 * _exp_ratio(y, length, reynolds)
    temperature = t_bottom + delta_t * _exp_ratio(y, length, prandtl * reynolds)
    return ux, temperature


# =============================================================================
# ERROR NORMS AND EOC
# =============================================================================

class NormType(str, Enum):
    L1 = "L1"
    L2 = "L2"
    LINF = "Linf"


def _norm_of(values: np.ndarray, p: NormType, delta_x: float) -> float:
    if p == NormType.L1:
        return float(np.sum(values) * delta_x ** 2)
    if p == NormType.L2:
        return float(math.sqrt(np.sum(values ** 2) * delta_x ** 2))
    return float(np.max(values))


def error_norm(sim, ref, mask: Optional[np.ndarray] = None,
               p: Union[str, NormType] = NormType.L2, relative: bool = False,
               delta_x: float = 1.0) -> float:
    """
    Discrete error norm of a simulated field against a reference.

    Args:
        sim: (nx, ny) or (2, nx, ny) simulated values
        ref: array of the same shape
        mask: cells to include (all cells when None)
        p: "L1", "L2" or "Linf"
        relative: divide by the same norm of the reference
        delta_x: cell size, D = 2 measure dx^2

    Returns:
        Scalar error
    """
    p = NormType(p)
    sim = Field(sim).data
    ref = Field(ref).data
    if sim.shape != ref.shape:
        raise ValidationError(f"Simulation shape {sim.shape} != reference shape {ref.shape}")
    if mask is None:
        mask = np.ones(sim.shape[1:], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValidationError("Error norm over an empty mask")

    diff = np.sqrt(((sim - ref) ** 2).sum(axis=0))[mask]
    error = _norm_of(diff, p, delta_x)
    if not relative:
        return error
    reference = _norm_of(np.sqrt((ref ** 2).sum(axis=0))[mask], p, delta_x)
    if reference == 0:
        raise ValidationError("Relative error with zero reference norm")
    return error / reference


def error_table(sim, ref, mask=None, delta_x: float = 1.0) -> Dict[str, float]:
    """All six norms keyed like L2AbsError / L2RelError."""
    table = {}
    for p in NormType:
        table[f"{p.value}AbsError"] = error_norm(sim, ref, mask, p, False, delta_x)
        table[f"{p.value}RelError"] = error_norm(sim, ref, mask, p, True, delta_x)
    return table


@dataclass(frozen=True)
class EocResult:
    slope: float
    pairwise: List[float]


def compute_eoc(pairs: Sequence[Tuple[float, float]]) -> EocResult:
    """Pairwise orders between consecutive (h, error) pairs and the fitted log-log slope."""
    if len(pairs) < 2:
        raise ValidationError("EOC needs at least two (h, error) pairs")
    h = np.array([pair[0] for pair in pairs], dtype=np.float64)
    err = np.array([pair[1] for pair in pairs], dtype=np.float64)
    if np.any(h <= 0) or np.any(err <= 0):
        raise ValidationError("EOC needs positive grid spacings and errors")
    pairwise = [
        float(math.log(err[i] / err[i + 1]) / math.log(h[i] / h[i + 1]))
        for i in range(len(pairs) - 1)
    ]
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return EocResult(slope=float(slope), pairwise=pairwise)


# =============================================================================
# CONVERGENCE TRACER
# =============================================================================

class ValueTracer:
    """Tracks the last ``window`` samples of a scalar and tests their spread."""

    def __init__(self, window: int, epsilon: float):
        if window < 2:
            raise ValidationError(f"ValueTracer window must be >= 2, got {window}")
        if not epsilon > 0:
            raise ValidationError(f"ValueTracer epsilon must be positive, got {epsilon}")
        self.window = int(window)
        self.epsilon = float(epsilon)
        self._values = deque(maxlen=self.window)

    def update(self, sample: float) -> "ValueTracer":
        self._values.append(float(sample))
        return self

    @property
    def is_full(self) -> bool:
        return len(self._values) == self.window

    @property
    def mean(self) -> float:
        return float(np.mean(self._values)) if self._values else 0.0

    @property
    def sigma(self) -> float:
        return float(np.std(self._values)) if self._values else 0.0

    def has_converged(self) -> bool:
        if not self.is_full:
            return False
        return self.sigma == 0.0 or self.sigma < self.epsilon * abs(self.mean)

    def reset(self) -> None:
        self._values.clear()


# =============================================================================
# FLUX AND START SCALES
# =============================================================================

@dataclass(frozen=True)
class FluxResult:
    flux: float
    length: float
    flow: Tuple[float, float]
    points: int


def line_flux(field: Field, origin: Sequence[float], normal: Sequence[int],
              mask: Optional[np.ndarray] = None) -> FluxResult:
    """
    Discrete flux through the grid line through ``origin`` orthogonal to ``normal``.

    Phi = dx * sum(u . n) over the sampled cells of the line.
    """
    if field.components != 2:
        raise ValidationError("Line flux needs a vector field")
    normal = tuple(int(v) for v in normal)
    if normal not in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        raise ValidationError(f"Flux normal must be axis aligned, got {normal}")
    ix, iy = field.index_of(origin)
    if normal[0] != 0:
        if not 0 <= ix < field.nx:
            raise GeometryError(f"Flux line x={origin[0]} outside the grid")
        values = field.data[:, ix, :]
        selected = np.ones(field.ny, dtype=bool) if mask is None else np.asarray(mask)[ix, :]
    else:
        if not 0 <= iy < field.ny:
            raise GeometryError(f"Flux line y={origin[1]} outside the grid")
        values = field.data[:, :, iy]
        selected = np.ones(field.nx, dtype=bool) if mask is None else np.asarray(mask)[:, iy]

    samples = values[:, selected]
    flow = samples.sum(axis=1) * field.delta_x
    flux = float(flow[0] * normal[0] + flow[1] * normal[1])
    return FluxResult(
        flux=flux,
        length=float(samples.shape[1] * field.delta_x),
        flow=(float(flow[0]), float(flow[1])),
        points=int(samples.shape[1]),
    )


class StartScale(str, Enum):
    POLYNOMIAL = "Polynomial"
    SINUS = "Sinus"


def start_scale(step: int, ramp_steps: int,
                kind: Union[str, StartScale] = StartScale.SINUS) -> float:
    """Smooth ramp from 0 at step 0 to 1 at ``ramp_steps``, flat afterwards."""
    if ramp_steps < 1:
        raise ValidationError(f"rampSteps must be >= 1, got {ramp_steps}")
    s = min(max(step / ramp_steps, 0.0), 1.0)
    if StartScale(kind) == StartScale.POLYNOMIAL:
        return 3.0 * s ** 2 - 2.0 * s ** 3
    return 0.5 * (1.0 - math.cos(math.pi * s))

