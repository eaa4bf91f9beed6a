"""Simulation and reconstruction for a lensless snapshot hyperspectral camera.

A diffuser spreads each scene point over many pixels of a sensor covered by a
tiled spectral filter array; the datacube is recovered from one 2D image by
FISTA with total-variation, nuclear-norm and non-negativity priors.
"""

from .core import (
    FilterFunction,
    HyperspectralCube,
    Measurement,
    Psf,
    SystemModel,
    adjoint,
    convolve2d_full,
    crop_center,
    forward,
    operator_norm,
)
from .estimator import HyperspectralReconstructor
from .priors import (
    TvWeights,
    nuclear_value,
    project_nonneg,
    prox_nuclear,
    prox_tv3d,
    tv3d_value,
)
from .solver import SolveDiagnostics, SolverConfig, fista_reconstruct, objective
from .validation import NumericalError, ShapeMismatchError

__version__ = "0.1.0"

__all__ = [
    "FilterFunction",
    "HyperspectralCube",
    "HyperspectralReconstructor",
    "Measurement",
    "NumericalError",
    "Psf",
    "ShapeMismatchError",
    "SolveDiagnostics",
    "SolverConfig",
    "SystemModel",
    "TvWeights",
    "adjoint",
    "convolve2d_full",
    "crop_center",
    "fista_reconstruct",
    "forward",
    "nuclear_value",
    "objective",
    "operator_norm",
    "project_nonneg",
    "prox_nuclear",
    "prox_tv3d",
    "tv3d_value",
]
