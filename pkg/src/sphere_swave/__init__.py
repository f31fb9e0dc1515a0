"""Spectral Galerkin and trigonometric time integration for the semilinear
stochastic wave equation on the unit sphere."""

__version__ = "0.1.0"

from .fields import ProductState, SpectralField, product_norm, sobolev_norm  # noqa: E402
from .grid import GridField, QuadratureGrid, analyze, build_grid, synthesize  # noqa: E402
from .integrators import StepperKind, evolve, si_step, stm_step  # noqa: E402
from .model import Nonlinearity, ProblemSpec, initial_state  # noqa: E402
from .noise import NoisePath, coarsen_time, power_spectrum, restrict_modes, sample_path  # noqa: E402
from .propagator import apply_group  # noqa: E402

__all__ = [
    "SpectralField",
    "ProductState",
    "product_norm",
    "sobolev_norm",
    "GridField",
    "QuadratureGrid",
    "analyze",
    "build_grid",
    "synthesize",
    "StepperKind",
    "evolve",
    "stm_step",
    "si_step",
    "Nonlinearity",
    "ProblemSpec",
    "initial_state",
    "NoisePath",
    "coarsen_time",
    "power_spectrum",
    "restrict_modes",
    "sample_path",
    "apply_group",
]
