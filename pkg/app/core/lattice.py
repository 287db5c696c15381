#!/usr/bin/env python3
"""
Block Lattice
Structure-of-arrays population storage with per-cell dynamics tags.

Populations live in q planes of nx x ny values. One step is
collide (dispatch per tag) -> periodic stream -> non-local post-step.
Collision only touches the columns of its own cells, so disjoint cell
chunks may be collided concurrently.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from app.core import boundary
from app.core.descriptor import DescriptorTable, descriptor_data
from app.core.dynamics import (
    DynamicsParams,
    DynamicsTag,
    collide_ade_bgk,
    collide_bgk,
    collide_forced_bgk,
    collide_trt,
    compute_moments,
    equilibrium_first_order,
    equilibrium_second_order,
)
from app.core.errors import NumericalBlowupError, ValidationError

# =============================================================================
# CONSTANTS
# =============================================================================

FIELD_SIZES = {"FORCE": 2, "VELOCITY": 2, "BOUNDARY": 1}

CHECKPOINT_MAGIC = b"LBCKPT01"

_NEEDS_NORMAL = (
    DynamicsTag.ZOU_HE_VELOCITY, DynamicsTag.ZOU_HE_PRESSURE,
    DynamicsTag.ADE_DIRICHLET, DynamicsTag.ADE_NEUMANN, DynamicsTag.ADE_ADIABATIC,
)

# smallest chunk worth handing to a worker thread
_MIN_CHUNK = 4096


@dataclass
class LatticeStatistics:
    """Averages over the bulk cells of the last collision."""
    average_rho: float = 0.0
    average_energy: float = 0.0
    max_u: float = 0.0
    cells: int = 0


# =============================================================================
# BLOCK LATTICE
# =============================================================================

class BlockLattice:
    """
    Populations, auxiliary fields and dynamics tags of one 2D block.

    Fields:
        FORCE     force density per cell (2 components)
        VELOCITY  advection velocity of an ADE lattice (2 components)
        BOUNDARY  Neumann payload dx * flux (1 component)
    """

    def __init__(self, descriptor, nx: int, ny: int, params: DynamicsParams,
                 fields: Iterable[str] = ("FORCE", "VELOCITY", "BOUNDARY"),
                 collision_workers: int = 1):
        self.descriptor: DescriptorTable = (
            descriptor if isinstance(descriptor, DescriptorTable) else descriptor_data(descriptor)
        )
        if nx < 1 or ny < 1:
            raise ValidationError(f"Lattice must be at least 1x1, got {nx}x{ny}")
        self.nx, self.ny = int(nx), int(ny)
        self.params = params
        q = self.descriptor.q

        self.f = np.zeros((q, self.nx, self.ny), dtype=np.float64)
        self._buffer = np.zeros_like(self.f)
        self.fields: Dict[str, np.ndarray] = {}
        for name in fields:
            if name not in FIELD_SIZES:
                raise ValidationError(f"Unknown field {name}. Available: {list(FIELD_SIZES)}")
            self.fields[name] = np.zeros((FIELD_SIZES[name], self.nx, self.ny))

        self.tags = np.zeros((self.nx, self.ny), dtype=np.int8)
        self.normals = np.zeros((2, self.nx, self.ny), dtype=np.int8)
        self.prescribed_rho = np.ones((self.nx, self.ny))
        self.prescribed_u = np.zeros((2, self.nx, self.ny))

        self.step = 0
        self.statistics = LatticeStatistics()
        self.collision_workers = max(1, int(collision_workers))
        self._executor: Optional[ThreadPoolExecutor] = None
        self._groups: Optional[Dict[Tuple[int, int, int], np.ndarray]] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nx, self.ny

    @property
    def cell_count(self) -> int:
        return self.nx * self.ny

    # ---- setup --------------------------------------------------------------

    def define_dynamics(self, mask: np.ndarray, tag: DynamicsTag,
                        normal: Optional[Sequence[int]] = None) -> None:
        tag = DynamicsTag(tag)
        mask = self._mask(mask)
        if tag in _NEEDS_NORMAL:
            normal = boundary.check_normal(normal)
        if tag in (DynamicsTag.ZOU_HE_VELOCITY, DynamicsTag.ZOU_HE_PRESSURE) \
                and self.descriptor.q != 9:
            raise ValidationError(f"{tag.name} needs D2Q9, lattice is {self.descriptor.name}")
        if tag.is_advection_diffusion and self.descriptor.q != 5:
            raise ValidationError(f"{tag.name} needs D2Q5, lattice is {self.descriptor.name}")
        if tag == DynamicsTag.FORCED_BGK:
            self._require_field("FORCE")
        if tag.is_advection_diffusion:
            self._require_field("VELOCITY")
        if tag == DynamicsTag.ADE_NEUMANN:
            self._require_field("BOUNDARY")

        self.tags[mask] = int(tag)
        self.normals[:, mask] = 0
        if normal is not None:
            self.normals[0, mask] = normal[0]
            self.normals[1, mask] = normal[1]
        self._groups = None

    def set_prescribed_rho(self, mask: np.ndarray, rho) -> None:
        mask = self._mask(mask)
        self.prescribed_rho[mask] = np.broadcast_to(rho, self.shape)[mask]

    def set_prescribed_velocity(self, mask: np.ndarray, velocity) -> None:
        mask = self._mask(mask)
        velocity = np.asarray(velocity, dtype=np.float64)
        if velocity.ndim == 1:
            velocity = velocity.reshape(2, 1, 1)
        self.prescribed_u[:, mask] = np.broadcast_to(velocity, (2,) + self.shape)[:, mask]

    def set_field(self, name: str, mask: np.ndarray, value) -> None:
        data = self._require_field(name)
        mask = self._mask(mask)
        value = np.asarray(value, dtype=np.float64)
        if value.ndim == 1:
            value = value.reshape(-1, 1, 1)
        data[:, mask] = np.broadcast_to(value, data.shape)[:, mask]

    def field(self, name: str) -> np.ndarray:
        return self._require_field(name)

    def ini_equilibrium(self, rho, velocity, mask: Optional[np.ndarray] = None,
                        order: int = 2) -> None:
        """Set populations to the equilibrium of the given moments."""
        rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), self.shape)
        velocity = np.asarray(velocity, dtype=np.float64)
        if velocity.ndim == 1:
            velocity = velocity.reshape(2, 1, 1)
        velocity = np.broadcast_to(velocity, (2,) + self.shape)
        if order == 2:
            feq = equilibrium_second_order(rho, velocity, self.descriptor)
        elif order == 1:
            feq = equilibrium_first_order(rho, velocity, self.descriptor)
        else:
            raise ValidationError(f"Equilibrium order must be 1 or 2, got {order}")
        if mask is None:
            self.f[:] = feq
        else:
            mask = self._mask(mask)
            self.f[:, mask] = feq[:, mask]

    # ---- moments ------------------------------------------------------------

    def density(self) -> np.ndarray:
        return self.f.sum(axis=0)

    def compute_moments(self) -> Tuple[np.ndarray, np.ndarray]:
        """Density and velocity planes; forced cells include the half-force shift."""
        force = None
        if "FORCE" in self.fields:
            forced = self.tags == DynamicsTag.FORCED_BGK
            force = np.where(forced, self.fields["FORCE"], 0.0)
        return compute_moments(self.f, self.descriptor, force)

    def velocity(self) -> np.ndarray:
        return self.compute_moments()[1]

    def total_mass(self, mask: Optional[np.ndarray] = None) -> float:
        if mask is None:
            mask = self.tags != DynamicsTag.NO_DYNAMICS
        return float(self.f[:, self._mask(mask)].sum())

    def tag_mask(self, *tags: DynamicsTag) -> np.ndarray:
        return np.isin(self.tags, [int(t) for t in tags])

    # ---- evolution ----------------------------------------------------------

    def collide(self) -> None:
        """Local collision of every tagged cell, bulk statistics refreshed."""
        flat = self.f.reshape(self.descriptor.q, -1)
        rho_parts, u_parts = [], []
        for (tag, nx_, ny_), idx in self._cell_groups().items():
            tag = DynamicsTag(tag)
            if tag == DynamicsTag.NO_DYNAMICS:
                continue
            for rho, u in self._collide_group(flat, tag, (nx_, ny_), idx):
                self._check_blowup(tag, rho)
                if tag.is_bulk:
                    rho_parts.append(rho)
                    u_parts.append(u)
        self._update_statistics(rho_parts, u_parts)

    def stream(self) -> None:
        """f_i(x + c_i) <- f_i(x) with periodic wraparound on both axes."""
        for i, (cx, cy) in enumerate(self.descriptor.c):
            if cx == 0 and cy == 0:
                self._buffer[i] = self.f[i]
            else:
                self._buffer[i] = np.roll(self.f[i], (cx, cy), axis=(0, 1))
        self.f, self._buffer = self._buffer, self.f

    def post_step(self) -> None:
        """
        Boundary stage run after streaming.

        Dirichlet and adiabatic ADE walls are closed first so density()
        reports the wall value and Neumann walls read closed neighbours.
        Re-closing them before the next collision is a no-op.
        """
        groups = self._cell_groups()
        flat = self.f.reshape(self.descriptor.q, -1)
        for (tag, nx_, ny_), idx in groups.items():
            if tag == DynamicsTag.ADE_DIRICHLET:
                block = flat[:, idx]
                boundary.ade_dirichlet(block, self.descriptor, (nx_, ny_),
                                       self.prescribed_rho.reshape(-1)[idx])
                flat[:, idx] = block
            elif tag == DynamicsTag.ADE_ADIABATIC:
                block = flat[:, idx]
                boundary.ade_adiabatic(block, self.descriptor, (nx_, ny_))
                flat[:, idx] = block
        for (tag, nx_, ny_), idx in groups.items():
            if tag != DynamicsTag.ADE_NEUMANN:
                continue
            ix, iy = np.unravel_index(idx, self.shape)
            neighbor = self.f[:, (ix + nx_) % self.nx, (iy + ny_) % self.ny].sum(axis=0)
            payload = self.fields["BOUNDARY"].reshape(1, -1)[0, idx]
            block = flat[:, idx]
            boundary.ade_neumann(block, self.descriptor, (nx_, ny_), neighbor, payload)
            flat[:, idx] = block

    def collide_and_stream(self) -> None:
        self.collide()
        self.stream()
        self.post_step()
        self.step += 1

    # ---- checkpoint ---------------------------------------------------------

    def save_checkpoint(self, path) -> None:
        """
        Write populations and fields to a flat binary file.

        Layout: 8-byte magic, one JSON header line, then little-endian float64
        planes (populations first, then field components), x fastest.
        """
        header = {
            "descriptor": self.descriptor.name,
            "nx": self.nx,
            "ny": self.ny,
            "fields": [[name, int(data.shape[0])] for name, data in self.fields.items()],
            "step": self.step,
        }
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            for plane in self._planes():
                fh.write(np.ascontiguousarray(plane.T).astype("<f8").tobytes())

    def load_checkpoint(self, path) -> int:
        """Restore populations, fields and step counter; returns the step."""
        with open(path, "rb") as fh:
            magic = fh.read(len(CHECKPOINT_MAGIC))
            if magic != CHECKPOINT_MAGIC:
                raise ValidationError(f"{path} is not a lattice checkpoint")
            header = json.loads(fh.readline().decode("utf-8"))
            payload = fh.read()

        if header["descriptor"] != self.descriptor.name \
                or header["nx"] != self.nx or header["ny"] != self.ny:
            raise ValidationError(
                f"Checkpoint {header['descriptor']} {header['nx']}x{header['ny']} does not "
                f"match lattice {self.descriptor.name} {self.nx}x{self.ny}")
        stored_fields = [(name, size) for name, size in header["fields"]]
        if stored_fields != [(n, int(d.shape[0])) for n, d in self.fields.items()]:
            raise ValidationError(f"Checkpoint fields {stored_fields} do not match lattice")

        values = np.frombuffer(payload, dtype="<f8")
        planes = self._planes()
        expected = len(planes) * self.cell_count
        if values.size != expected:
            raise ValidationError(f"Checkpoint payload has {values.size} values, expected {expected}")
        for k, plane in enumerate(planes):
            chunk = values[k * self.cell_count:(k + 1) * self.cell_count]
            plane[:] = chunk.reshape(self.ny, self.nx).T
        self.step = int(header["step"])
        return self.step

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    # ---- internals ----------------------------------------------------------

    def _planes(self):
        planes = [self.f[i] for i in range(self.descriptor.q)]
        for data in self.fields.values():
            planes.extend(data[k] for k in range(data.shape[0]))
        return planes

    def _mask(self, mask) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.shape:
            raise ValidationError(f"Mask shape {mask.shape} != lattice shape {self.shape}")
        return mask

    def _require_field(self, name: str) -> np.ndarray:
        if name not in self.fields:
            raise ValidationError(f"Lattice has no {name} field")
        return self.fields[name]

    def _cell_groups(self) -> Dict[Tuple[int, int, int], np.ndarray]:
        """Flat cell indices grouped by (tag, normal)."""
        if self._groups is None:
            key = (self.tags.astype(np.int64) * 9
                   + (self.normals[0].astype(np.int64) + 1) * 3
                   + (self.normals[1].astype(np.int64) + 1)).ravel()
            groups = {}
            for value in np.unique(key):
                tag, rest = divmod(int(value), 9)
                nx_, ny_ = divmod(rest, 3)
                groups[(tag, nx_ - 1, ny_ - 1)] = np.nonzero(key == value)[0]
            self._groups = groups
        return self._groups

    def _collide_group(self, flat, tag, normal, idx):
        if self.collision_workers == 1 or idx.size < 2 * _MIN_CHUNK:
            return [self._collide_block(flat, tag, normal, idx)]
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.collision_workers)
        chunks = np.array_split(idx, min(self.collision_workers, idx.size // _MIN_CHUNK))
        return list(self._executor.map(
            lambda chunk: self._collide_block(flat, tag, normal, chunk), chunks))

    def _collide_block(self, flat, tag, normal, idx):
        table = self.descriptor
        omega = self.params.omega
        block = flat[:, idx]
        u = None

        if tag == DynamicsTag.BGK:
            rho, u = collide_bgk(block, omega, table)
        elif tag == DynamicsTag.FORCED_BGK:
            force = self.fields["FORCE"].reshape(2, -1)[:, idx]
            rho, u = collide_forced_bgk(block, omega, force, table)
        elif tag == DynamicsTag.TRT:
            rho, u = collide_trt(block, omega, self.params.magic, table)
        elif tag == DynamicsTag.BOUNCE_BACK:
            boundary.apply_bounce_back(block, table)
            rho = block.sum(axis=0)
        elif tag == DynamicsTag.ZOU_HE_VELOCITY:
            u = self.prescribed_u.reshape(2, -1)[:, idx]
            rho = boundary.zou_he_velocity(block, table, normal, u)
            collide_bgk(block, omega, table, rho, u)
        elif tag == DynamicsTag.ZOU_HE_PRESSURE:
            rho = self.prescribed_rho.reshape(-1)[idx]
            u = boundary.zou_he_pressure(block, table, normal, rho)
            collide_bgk(block, omega, table, rho, u)
        else:
            u = self.fields["VELOCITY"].reshape(2, -1)[:, idx]
            if tag == DynamicsTag.ADE_DIRICHLET:
                boundary.ade_dirichlet(block, table, normal, self.prescribed_rho.reshape(-1)[idx])
            elif tag == DynamicsTag.ADE_ADIABATIC:
                boundary.ade_adiabatic(block, table, normal)
            rho = collide_ade_bgk(block, omega, u, table)

        flat[:, idx] = block
        return rho, u

    def _check_blowup(self, tag: DynamicsTag, rho: np.ndarray) -> None:
        # concentrations may be negative, densities may not
        if tag.is_advection_diffusion or self.descriptor.q == 5:
            bad = ~np.isfinite(rho)
        else:
            bad = ~(np.isfinite(rho) & (rho > 0))
        if np.any(bad):
            raise NumericalBlowupError(
                f"{tag.name} cells diverged ({int(bad.sum())} cells with invalid density)",
                step=self.step)

    def _update_statistics(self, rho_parts, u_parts) -> None:
        if not rho_parts:
            self.statistics = LatticeStatistics()
            return
        rho = np.concatenate(rho_parts)
        u = np.concatenate(u_parts, axis=1)
        usqr = u[0] ** 2 + u[1] ** 2
        self.statistics = LatticeStatistics(
            average_rho=float(rho.mean()),
            average_energy=float(0.5 * usqr.mean()),
            max_u=float(np.sqrt(usqr.max())),
            cells=int(rho.size),
        )
