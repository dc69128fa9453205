"""Numerical spectral-gap estimates for linearized Boltzmann and Landau operators."""
from .errors import (
    DomainError,
    EmptyComplementError,
    HypothesisViolation,
    IntegrationError,
    QuadratureOrderError,
    ResolutionError,
    SpecgapError,
)
from .quadrature import IntegralEstimate, QuadratureGrid, gauss_hermite_grid, integrate, sphere_grid
from .kernels import (
    ConstantAngular,
    ConstantKernel,
    GrazingAngular,
    Mollifier,
    PowerLawKernel,
    TabulatedAngular,
    TabulatedKernel,
    compute_c_b,
    kernel_from_json,
)
from .functions import BasisIndex, PolynomialFunction, SonineBasis, collision_invariants
from .dissipation import Grids, d_boltzmann, d_boltzmann_omega, d_landau, grazing_sweep
from .spectral import (
    GalerkinSystem,
    assemble_boltzmann,
    assemble_landau,
    bobylev_lambda0,
    gap_analysis,
    lambda0_sweep,
    spectral_gap,
)
from .bounds import bound_report, k_gamma, optimize_R, run_suite, s_gamma_bo, s_gamma_la

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EmptyComplementError",
    "HypothesisViolation",
    "IntegrationError",
    "QuadratureOrderError",
    "ResolutionError",
    "SpecgapError",
    "IntegralEstimate",
    "QuadratureGrid",
    "gauss_hermite_grid",
    "integrate",
    "sphere_grid",
    "ConstantAngular",
    "ConstantKernel",
    "GrazingAngular",
    "Mollifier",
    "PowerLawKernel",
    "TabulatedAngular",
    "TabulatedKernel",
    "compute_c_b",
    "kernel_from_json",
    "BasisIndex",
    "PolynomialFunction",
    "SonineBasis",
    "collision_invariants",
    "Grids",
    "d_boltzmann",
    "d_boltzmann_omega",
    "d_landau",
    "grazing_sweep",
    "GalerkinSystem",
    "assemble_boltzmann",
    "assemble_landau",
    "bobylev_lambda0",
    "gap_analysis",
    "lambda0_sweep",
    "spectral_gap",
    "bound_report",
    "k_gamma",
    "optimize_R",
    "run_suite",
    "s_gamma_bo",
    "s_gamma_la",
]
