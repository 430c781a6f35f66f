"""Finite-volume simulation and equilibrium analysis for SIS models with cross-diffusion.

Two models are covered: the conserved model (total population ``N`` fixed)
and the source model with linear recruitment ``Lambda - S``. Both share the
incidence ``beta*S*I/(S+I)`` and the cross-diffusion flux ``chi*S*grad(I)``.
"""
from .domain import CoefficientSpec, Grid1D, ModelKind, ModelParams, State, integrate
from .evolve import IntegratorConfig, simulate
from .kernels import BACKEND
from .spectral import basic_reproduction_number, critical_diffusion, principal_eigenpair
from .steady import solve_dfe_model2, solve_endemic_model1, solve_endemic_model2

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CoefficientSpec", "Grid1D", "IntegratorConfig", "ModelKind",
    "ModelParams", "State", "basic_reproduction_number", "critical_diffusion",
    "integrate", "principal_eigenpair", "simulate", "solve_dfe_model2",
    "solve_endemic_model1", "solve_endemic_model2",
]
