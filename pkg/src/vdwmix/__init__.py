"""Structure-preserving simulation of Darcy transport in van der Waals mixtures."""
from .thermo import (
    ETA_LARGE, ETA_SMALL, DomainError, MixtureParams, ParameterError, case_params,
    chemical_potentials, condition_constants, free_energy, hessian, pressure,
)
from .inversion import equilibrium_state, phi_inverse
from .grid import DIRICHLET, NEUMANN, Field, Grid1D, ProfileRecipe, initial_profile
from .darcy import StepControl, run
from .regularized import run_regularized

__version__ = "0.1.0"
