#!/usr/bin/env python3
"""
Output Writers
VTK ImageData (ascii), CSV tables, PPM heatmaps and checkpoint file names.

All writers are deterministic: identical inputs produce identical bytes.
"""

import csv
import os
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.analysis import Field
from app.core.errors import ValidationError
from app.core.ostream import get_logger

logger = get_logger("Output")

PathLike = Union[str, os.PathLike]

# (position, (r, g, b)) control points on [0, 1]
COLORMAPS = {
    "grey": [(0.0, (0, 0, 0)), (1.0, (255, 255, 255))],
    "rainbow": [
        (0.00, (0, 0, 255)),
        (0.25, (0, 255, 255)),
        (0.50, (0, 255, 0)),
        (0.75, (255, 255, 0)),
        (1.00, (255, 0, 0)),
    ],
}


# =============================================================================
# FILE NAMES
# =============================================================================

def ensure_dir(path: PathLike) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def dump_name(name: str, step: int, suffix: str) -> str:
    """Step-stamped file name, e.g. poiseuille2d_iT00000300.vti"""
    return f"{name}_iT{int(step):08d}.{suffix}"


def checkpoint_path(directory: PathLike, name: str, step: int) -> Path:
    return Path(directory) / dump_name(name, step, "chk")


# =============================================================================
# VTI
# =============================================================================

def _format(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def write_vti(fields: Dict[str, Field], path: PathLike, origin: Sequence[float] = (0.0, 0.0),
              delta_x: float = 1.0) -> Path:
    """
    Write named scalar/vector fields as VTK XML ImageData with ascii arrays.

    Points are ordered x fastest; vector components are interleaved.
    """
    if not fields:
        raise ValidationError("write_vti needs at least one field")
    shapes = {f.data.shape[1:] for f in fields.values()}
    if len(shapes) != 1:
        raise ValidationError(f"Fields have inconsistent shapes: {sorted(shapes)}")
    nx, ny = shapes.pop()
    extent = f"0 {nx - 1} 0 {ny - 1} 0 0"

    root = ET.Element("VTKFile", type="ImageData", version="0.1", byte_order="LittleEndian")
    image = ET.SubElement(root, "ImageData", WholeExtent=extent,
                          Origin=f"{origin[0]:.17g} {origin[1]:.17g} 0",
                          Spacing=f"{delta_x:.17g} {delta_x:.17g} {delta_x:.17g}")
    piece = ET.SubElement(image, "Piece", Extent=extent)
    point_data = ET.SubElement(piece, "PointData")
    for name, field in fields.items():
        array = ET.SubElement(point_data, "DataArray", type="Float64", Name=name,
                              NumberOfComponents=str(field.components), format="ascii")
        # (c, nx, ny) -> points x fastest, components interleaved
        ordered = np.transpose(field.data, (2, 1, 0)).reshape(-1)
        array.text = _format(ordered)

    ET.indent(root)
    path = Path(path)
    path.write_bytes(b'<?xml version="1.0"?>\n' + ET.tostring(root, encoding="utf-8") + b"\n")
    return path


def read_vti(path: PathLike) -> Tuple[Dict[str, Field], Tuple[int, int]]:
    """Parse an ascii VTI written by write_vti back into fields."""
    root = ET.parse(path).getroot()
    image = root.find("ImageData")
    if image is None:
        raise ValidationError(f"{path} has no ImageData element")
    x0, x1, y0, y1, _, _ = (int(v) for v in image.get("WholeExtent").split())
    nx, ny = x1 - x0 + 1, y1 - y0 + 1
    origin = tuple(float(v) for v in image.get("Origin").split())[:2]
    delta_x = float(image.get("Spacing").split()[0])
    fields = {}
    for array in image.iter("DataArray"):
        comps = int(array.get("NumberOfComponents", "1"))
        values = np.array((array.text or "").split(), dtype=np.float64)
        data = values.reshape(ny, nx, comps).transpose(2, 1, 0)
        fields[array.get("Name")] = Field(data, origin, delta_x)
    return fields, (nx, ny)


# =============================================================================
# CSV
# =============================================================================

def _cell(value, precision: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{precision}g}"
    return str(value)


def write_csv(rows: Iterable[Sequence], header: Sequence[str], path: PathLike,
              precision: int = 16) -> Path:
    rows = [list(row) for row in rows]
    for row in rows:
        if len(row) != len(header):
            raise ValidationError(f"CSV row has {len(row)} values, header has {len(header)}")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v, precision) for v in row])
    return path


def read_csv(path: PathLike) -> Tuple[List[str], List[List[str]]]:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, [])
        return header, [row for row in reader]


# =============================================================================
# PPM HEATMAP
# =============================================================================

def colorize(values: np.ndarray, colormap: str = "grey", vmin: Optional[float] = None,
             vmax: Optional[float] = None) -> np.ndarray:
    """Map values to uint8 RGB; a degenerate range maps to the colormap midpoint."""
    if colormap not in COLORMAPS:
        raise ValidationError(f"Unknown colormap {colormap}. Available: {list(COLORMAPS)}")
    values = np.asarray(values, dtype=np.float64)
    lo = float(np.min(values)) if vmin is None else float(vmin)
    hi = float(np.max(values)) if vmax is None else float(vmax)
    if hi > lo:
        t = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
    else:
        t = np.full(values.shape, 0.5)
    points = COLORMAPS[colormap]
    positions = [p for p, _ in points]
    rgb = np.stack([
        np.interp(t, positions, [color[k] for _, color in points]) for k in range(3)
    ], axis=-1)
    return np.rint(rgb).astype(np.uint8)


def write_ppm_heatmap(field, path: PathLike, colormap: str = "grey",
                      vmin: Optional[float] = None, vmax: Optional[float] = None) -> Path:
    """Binary P6 image, width nx and height ny, top row is the largest y."""
    data = field.data[0] if isinstance(field, Field) else np.asarray(field, dtype=np.float64)
    if data.ndim != 2:
        raise ValidationError(f"Heatmap needs a scalar (nx, ny) field, got {data.shape}")
    nx, ny = data.shape
    image = colorize(data.T[::-1], colormap, vmin, vmax)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(image.tobytes())
    return path
