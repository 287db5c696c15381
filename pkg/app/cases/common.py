#!/usr/bin/env python3
"""
Case Driver Utilities
Configuration loading, run reports, the main-loop timer and the
convergence / output bookkeeping shared by every benchmark case.
"""

import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from app.core.analysis import Field, ValueTracer, compute_eoc, start_scale
from app.core.config import ConfigTree, parse_config
from app.core.errors import ValidationError
from app.core.lattice import BlockLattice
from app.core.ostream import get_logger
from app.core.output import (
    checkpoint_path,
    dump_name,
    ensure_dir,
    write_csv,
    write_ppm_heatmap,
    write_vti,
)
from app.core.units import UnitConverter

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "cases"

MACH_WARNING = 0.4

logger = get_logger("main")


# =============================================================================
# CONFIGURATION
# =============================================================================

@dataclass
class CaseConfig:
    """Parameters of one case run; ``tree`` keeps every key for case specifics."""
    name: str
    tree: ConfigTree
    output_dir: Path
    resolution: int
    relaxation_time: float
    max_phys_time: float
    save_time: float
    checkpoint_time: float
    start_up_time: float
    boundary_update_time: float
    convergence_type: str
    convergence_interval: float
    residuum: float
    resolutions: List[int]
    print_converter: bool
    colormap: str
    collision_workers: int
    restart: Optional[Path] = None

    def with_resolution(self, resolution: int) -> "CaseConfig":
        clone = CaseConfig(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        clone.resolution = int(resolution)
        clone.output_dir = self.output_dir / f"N{int(resolution)}"
        return clone

    def get_float(self, key: str, default: Optional[float] = None) -> Optional[float]:
        return self.tree.get_float(key, default)

    def get_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        return self.tree.get_int(key, default)

    def get_str(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return self.tree.get_str(key, default)

    def get_bool(self, key: str, default: Optional[bool] = None) -> Optional[bool]:
        return self.tree.get_bool(key, default)

    def get_list(self, key: str, default=None, item_type=float):
        return self.tree.get_list(key, default, item_type)


def default_config_path(case_name: str) -> Path:
    return DATA_DIR / f"{case_name}.conf"


def load_case_config(case_name: str, config_path: Optional[str] = None,
                     output_dir: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> CaseConfig:
    """
    Defaults from app/data/cases/<case>.conf, overlaid by a user file and
    explicit overrides. Output dir precedence: argument, LBKIT_OUTPUT_DIR,
    Output.OutputDir, ./tmp.
    """
    default_path = default_config_path(case_name)
    tree = parse_config(default_path) if default_path.exists() else ConfigTree(source=case_name)
    if config_path:
        tree = tree.overlay(parse_config(config_path))
    for key, value in (overrides or {}).items():
        tree.set(key, value)
    return build_case_config(case_name, tree, output_dir)


def build_case_config(case_name: str, tree: ConfigTree,
                      output_dir: Optional[str] = None) -> CaseConfig:
    base = output_dir or os.environ.get("LBKIT_OUTPUT_DIR") \
        or tree.get_str("Output.OutputDir", "./tmp")
    resolution = tree.get_int("Application.Discretization.Resolution", 50)
    resolutions = tree.get_list("Application.Mesh.Resolutions", [resolution], int)
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValidationError(f"Resolutions must be strictly increasing, got {resolutions}")

    config = CaseConfig(
        name=case_name,
        tree=tree,
        output_dir=Path(base) / case_name,
        resolution=resolution,
        relaxation_time=tree.get_float("Application.Discretization.LatticeRelaxationTime", 0.8),
        max_phys_time=tree.get_float("Application.PhysParameters.PhysMaxTime", 10.0),
        save_time=tree.get_float("Output.SaveTime", 0.0),
        checkpoint_time=tree.get_float("Output.CheckpointTime", 0.0),
        start_up_time=tree.get_float("Application.PhysParameters.StartUpTime", 0.0),
        boundary_update_time=tree.get_float("Application.PhysParameters.BoundaryValueUpdateTime", 0.0),
        convergence_type=tree.get_str("Application.ConvergenceCheck.Type", "AverageEnergy"),
        convergence_interval=tree.get_float("Application.ConvergenceCheck.Interval", 1.0),
        residuum=tree.get_float("Application.ConvergenceCheck.Residuum", 1e-5),
        resolutions=resolutions,
        print_converter=tree.get_bool("Output.PrintLogConverter", True),
        colormap=tree.get_str("Output.Colormap", "rainbow"),
        collision_workers=tree.get_int("Application.Discretization.CollisionWorkers", 1),
    )
    for name in ("max_phys_time", "convergence_interval", "residuum"):
        if not getattr(config, name) > 0:
            raise ValidationError(f"{name} must be positive, got {getattr(config, name)}")
    return config


# =============================================================================
# REPORT
# =============================================================================

@dataclass
class CaseReport:
    """Outcome of a case run (one row per resolution)."""
    case: str
    mode: str = ""
    rows: List[Dict[str, float]] = field(default_factory=list)
    eoc: Dict[str, float] = field(default_factory=dict)
    wall_clock: float = 0.0
    convergence_step: Optional[int] = None
    converged: bool = False
    files: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable(asdict(self))

    def merge(self, other: "CaseReport") -> None:
        self.rows.extend(other.rows)
        self.files.extend(other.files)
        self.wall_clock += other.wall_clock


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def eoc_summary(report: CaseReport, spacing_key: str, error_keys: Sequence[str]) -> Dict[str, float]:
    """Fitted log-log slopes of the given error columns of a multi-resolution report."""
    summary = {}
    if len(report.rows) < 2:
        return summary
    for key in error_keys:
        pairs = [(row[spacing_key], row[key]) for row in report.rows]
        if all(err > 0 for _, err in pairs):
            summary[key] = compute_eoc(pairs).slope
    report.eoc.update(summary)
    return summary


def write_report_csv(report: CaseReport, path: Path, columns: Sequence[str]) -> Path:
    ensure_dir(Path(path).parent)
    rows = [[row.get(col, float("nan")) for col in columns] for row in report.rows]
    write_csv(rows, list(columns), path)
    report.files.append(str(path))
    return path


# =============================================================================
# MAIN LOOP HELPERS
# =============================================================================

class Timer:
    """Wall-clock progress and throughput of the main loop."""

    def __init__(self, max_steps: int, cells: int):
        self.max_steps = max(int(max_steps), 1)
        self.cells = int(cells)
        self.started = time.perf_counter()
        self._last_time = self.started
        self._last_step = 0
        self._log = get_logger("Timer")

    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    def mlups(self, step: int) -> float:
        elapsed = self.elapsed()
        return step * self.cells / elapsed / 1e6 if elapsed > 0 else 0.0

    def print_step(self, step: int) -> None:
        now = time.perf_counter()
        passed = now - self.started
        remaining = passed / max(step, 1) * (self.max_steps - step)
        interval = now - self._last_time
        mlups = (step - self._last_step) * self.cells / interval / 1e6 if interval > 0 else 0.0
        self._log.info(f"step={step}; percent={100.0 * step / self.max_steps:.1f}; "
                       f"passedTime={passed:.3f}; remTime={max(remaining, 0.0):.3f}; "
                       f"MLUPs={mlups:.3f}")
        self._last_time, self._last_step = now, step

    def print_summary(self, step: int) -> None:
        self._log.info(f"Measured time (rt) : {self.elapsed():.3f}s; "
                       f"steps={step}; MLUPs={self.mlups(step):.3f}")


def convergence_value(lattice: BlockLattice, kind: str) -> float:
    stats = lattice.statistics
    if kind == "MaxLatticeVelocity":
        return stats.max_u
    if kind == "AverageRho":
        return stats.average_rho
    if kind == "AverageEnergy":
        return stats.average_energy
    raise ValidationError(
        f"Unknown ConvergenceCheck.Type {kind}. "
        f"Available: ['MaxLatticeVelocity', 'AverageEnergy', 'AverageRho']")


def make_tracer(config: CaseConfig, converter: UnitConverter) -> ValueTracer:
    window = max(converter.lattice_time(config.convergence_interval), 2)
    return ValueTracer(window, config.residuum)


def ramp_steps(config: CaseConfig, converter: UnitConverter) -> int:
    return converter.lattice_time(config.start_up_time)


def ramp_fraction(step: int, steps: int, kind: str = "Sinus") -> float:
    if steps < 1:
        return 1.0
    return start_scale(step, steps, kind)


def every(config_time: float, converter: UnitConverter) -> int:
    """Step period of a physical interval; 0 disables."""
    if config_time <= 0:
        return 0
    return max(converter.lattice_time(config_time), 1)


def log_statistics(lattice: BlockLattice, converter: UnitConverter, tag: str = "LatticeStatistics") -> None:
    stats = lattice.statistics
    get_logger(tag).info(
        f"step={lattice.step}; t={converter.phys_time(lattice.step):.6g}; "
        f"uMax={stats.max_u:.6e}; avEnergy={stats.average_energy:.6e}; "
        f"avRho={stats.average_rho:.9f}")
    if stats.max_u > MACH_WARNING:
        logger.warning(f"maxU={stats.max_u:.4f} exceeds {MACH_WARNING}")


def write_snapshot(config: CaseConfig, lattice: BlockLattice, converter: UnitConverter,
                   origin: Sequence[float], files: List[str], name: Optional[str] = None,
                   extra: Optional[Dict[str, np.ndarray]] = None) -> str:
    """VTI dump of physical velocity and pressure (plus extra scalar planes)."""
    directory = ensure_dir(config.output_dir / "vtkData")
    rho, u = lattice.compute_moments()
    fields = {
        "physVelocity": Field(converter.phys_velocity(u), origin, converter.delta_x),
        "physPressure": Field((rho - 1.0) / 3.0 * converter.pressure_factor, origin,
                              converter.delta_x),
    }
    for key, plane in (extra or {}).items():
        fields[key] = Field(plane, origin, converter.delta_x)
    path = directory / dump_name(name or config.name, lattice.step, "vti")
    write_vti(fields, path, origin, converter.delta_x)
    files.append(str(path))
    return str(path)


def write_heatmap(config: CaseConfig, plane: np.ndarray, step: int, files: List[str],
                  name: Optional[str] = None) -> str:
    directory = ensure_dir(config.output_dir / "imageData")
    path = directory / dump_name(name or config.name, step, "ppm")
    write_ppm_heatmap(plane, path, config.colormap)
    files.append(str(path))
    return str(path)


def maybe_checkpoint(config: CaseConfig, lattice: BlockLattice, period: int,
                     files: List[str], name: Optional[str] = None) -> None:
    if period and lattice.step % period == 0:
        path = checkpoint_path(ensure_dir(config.output_dir / "checkpoints"),
                               name or config.name, lattice.step)
        lattice.save_checkpoint(path)
        files.append(str(path))


def restore(config: CaseConfig, lattice: BlockLattice) -> None:
    if config.restart is not None:
        step = lattice.load_checkpoint(config.restart)
        logger.info(f"Restarted from {config.restart} at step {step}")


def run_loop(config: CaseConfig, lattice: BlockLattice, converter: UnitConverter,
             max_steps: int, before_step: Optional[Callable[[int], None]] = None,
             after_step: Optional[Callable[[int], None]] = None,
             on_save: Optional[Callable[[int], None]] = None,
             tracer: Optional[ValueTracer] = None,
             check_from: int = 0) -> Dict[str, Any]:
    """
    Drive ``lattice`` until ``max_steps`` or tracer convergence.

    Per step: before_step (boundary refresh) -> collide and stream ->
    after_step (coupling, observers) -> convergence / output bookkeeping.
    """
    timer = Timer(max_steps, lattice.cell_count)
    save_every = every(config.save_time, converter)
    checkpoint_every = every(config.checkpoint_time, converter)
    files: List[str] = []
    converged = False

    while lattice.step < max_steps:
        step = lattice.step
        if before_step:
            before_step(step)
        lattice.collide_and_stream()
        if after_step:
            after_step(lattice.step)
        if tracer is not None and lattice.step > check_from:
            tracer.update(convergence_value(lattice, config.convergence_type))
        if save_every and lattice.step % save_every == 0:
            timer.print_step(lattice.step)
            log_statistics(lattice, converter)
            if on_save:
                on_save(lattice.step)
        maybe_checkpoint(config, lattice, checkpoint_every, files)
        if tracer is not None and tracer.has_converged():
            converged = True
            logger.info(f"Simulation converged at step {lattice.step} "
                        f"(t={converter.phys_time(lattice.step):.6g})")
            break

    timer.print_summary(lattice.step)
    return {"converged": converged, "steps": lattice.step,
            "wall_clock": timer.elapsed(), "files": files, "mlups": timer.mlups(lattice.step)}


def check_case_name(name: str, known: Sequence[str]) -> None:
    if name not in known:
        raise ValidationError(f"Unknown case {name}. Available: {sorted(known)}")
