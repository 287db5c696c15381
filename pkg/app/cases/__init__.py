"""
Benchmark case registry.

Every case maps a name to its runner and the CLI actions it supports.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

from app.cases.advection_diffusion import run_advection_diffusion_1d, run_advection_diffusion_2d
from app.cases.cavity import run_cavity2d
from app.cases.common import (
    CaseConfig,
    CaseReport,
    check_case_name,
    eoc_summary,
    load_case_config,
    write_report_csv,
)
from app.cases.optimization import run_poiseuille_identification, run_rosenbrock
from app.cases.poiseuille import run_poiseuille2d
from app.cases.porous_plate import run_porous_plate_2d
from app.core.errors import ValidationError
from app.core.ostream import get_logger

logger = get_logger("main")


@dataclass(frozen=True)
class CaseEntry:
    runner: Callable[[CaseConfig], CaseReport]
    eoc_columns: Sequence[str] = ()
    optimization: bool = False

    @property
    def supports_eoc(self) -> bool:
        return bool(self.eoc_columns)


_VELOCITY_NORMS = ("L1RelError", "L2RelError", "LinfRelError")

CASES: Dict[str, CaseEntry] = {
    "poiseuille2d": CaseEntry(run_poiseuille2d, _VELOCITY_NORMS),
    "advectionDiffusion1d": CaseEntry(run_advection_diffusion_1d, ("averageL2RelError",)),
    "advectionDiffusion2d": CaseEntry(run_advection_diffusion_2d, ("averageL2RelError",)),
    "porousPlate2d": CaseEntry(run_porous_plate_2d, ("velocityError", "temperatureError")),
    "cavity2d": CaseEntry(run_cavity2d),
    "rosenbrock": CaseEntry(run_rosenbrock, optimization=True),
    "poiseuilleIdentification": CaseEntry(run_poiseuille_identification, optimization=True),
}


def case_names():
    return sorted(CASES)


def get_case(name: str) -> CaseEntry:
    check_case_name(name, list(CASES))
    return CASES[name]


def run_case(name: str, config: Optional[CaseConfig] = None, **kwargs) -> CaseReport:
    """Run one case at its configured resolution."""
    entry = get_case(name)
    config = config or load_case_config(name, **kwargs)
    logger.info(f"Running {name} -> {config.output_dir}")
    return entry.runner(config)


def run_eoc(name: str, config: Optional[CaseConfig] = None,
            resolutions: Optional[Sequence[int]] = None, **kwargs) -> CaseReport:
    """Run a case once per resolution and fit the order of convergence."""
    entry = get_case(name)
    if not entry.supports_eoc:
        raise ValidationError(f"Case {name} has no convergence study")
    config = config or load_case_config(name, **kwargs)
    resolutions = list(resolutions or config.resolutions)
    if len(resolutions) < 2:
        raise ValidationError("A convergence study needs at least two resolutions")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValidationError(f"Resolutions must be strictly increasing, got {resolutions}")

    report = CaseReport(case=name, mode="eoc")
    for resolution in resolutions:
        single = entry.runner(config.with_resolution(resolution))
        report.merge(single)
        report.mode = single.mode
    eoc_summary(report, "deltaX", entry.eoc_columns)
    columns = list(report.rows[0])
    write_report_csv(report, config.output_dir / "eoc.csv", columns)
    for key, slope in report.eoc.items():
        logger.info(f"EOC {key} = {slope:.4f}")
    return report


def run_optimization(name: str, config: Optional[CaseConfig] = None, **kwargs) -> CaseReport:
    entry = get_case(name)
    if not entry.optimization:
        raise ValidationError(f"Case {name} is not an optimization case")
    return run_case(name, config, **kwargs)


__all__ = [
    "CASES",
    "CaseEntry",
    "case_names",
    "get_case",
    "run_case",
    "run_eoc",
    "run_optimization",
]
