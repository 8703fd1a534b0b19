"""Lensless single-sensor compressive imaging: permuted-Hadamard acquisition and
SLOPE reconstruction by shrinkage of overlapping-patch DCT coefficients."""

from .acquisition import (CalibrationModel, Measurements, calibrate, sense_ideal,
                          sense_physical, sense_rgb)
from .hadamard import HadamardOperator, adjoint, build_operator, forward, fwht
from .metrics import QualityReport, psnr
from .patches import PatchSystem
from .shrinkage import ShrinkagePolicy
from .solver import DivergenceError, IterationTrace, SolverConfig, solve, solve_rgb

__version__ = "0.1.0"

__all__ = [
    "CalibrationModel", "DivergenceError", "HadamardOperator", "IterationTrace",
    "Measurements", "PatchSystem", "QualityReport", "ShrinkagePolicy", "SolverConfig",
    "adjoint", "build_operator", "calibrate", "forward", "fwht", "psnr", "sense_ideal",
    "sense_physical", "sense_rgb", "solve", "solve_rgb",
]
