"""Optical nanofiber workbench: guided modes, atom coupling, trapping and taper fabrication."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, NanofiberError, NoBoundMinimum, SolverError
from .mathkernel import CONST
from .modes import FiberSpec, ModeId, ModeSolution, mode_neff, solve_mode, solve_modes, v_number
from .fields import evaluate_fields, intensity, quasilinear
from .coupling import RB87_D2, AtomSpec, coupling_report, gamma_1d
from .trap import GridSpec, TrapBeam, TrapConfig, total_potential
from .taper import TaperProfile, plan_pull, simulate_pull
from .spectra import extract_ridges, radius_from_beat, spectrogram

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "NanofiberError",
    "NoBoundMinimum",
    "SolverError",
    "CONST",
    "FiberSpec",
    "ModeId",
    "ModeSolution",
    "mode_neff",
    "solve_mode",
    "solve_modes",
    "v_number",
    "evaluate_fields",
    "intensity",
    "quasilinear",
    "RB87_D2",
    "AtomSpec",
    "coupling_report",
    "gamma_1d",
    "GridSpec",
    "TrapBeam",
    "TrapConfig",
    "total_potential",
    "TaperProfile",
    "plan_pull",
    "simulate_pull",
    "extract_ridges",
    "radius_from_beat",
    "spectrogram",
]
