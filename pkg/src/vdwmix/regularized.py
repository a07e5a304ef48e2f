"""Transport with regularizing cross diffusion in the reduced form

    d_t c_i = d_x((1 + eps beta) c_i d_x p + eps alpha d_x c_i),

which is what the full cross-diffusion system becomes when the diffusion
matrix is alpha (en'')^{-1} + beta c c^T. Convection stays upwind, the
Fickian part is centered; grids, Newton and step control are shared with
the diffusion-free scheme.
"""
import numpy as np

from . import darcy
from .grid import DIRICHLET, Field
from .inversion import InversionSettings, equilibrium_state


def _coefficients(params):
    return 1.0 + params.eps * params.beta, params.eps * params.alpha


def flux_regularized(params, c_left, c_right, p_left, p_right, h):
    conv, diff = _coefficients(params)
    c_left, c_right = np.asarray(c_left, float), np.asarray(c_right, float)
    return conv * darcy.upwind_flux(c_left, c_right, p_left, p_right, h) - diff * (c_right - c_left) / h


def equilibrium_boundary(params, field, settings=InversionSettings()):
    """Copy of a Dirichlet field whose end nodes carry the zero-potential state."""
    if field.grid.kind != DIRICHLET:
        raise ValueError("equilibrium boundary data needs a Dirichlet grid")
    c_eq = equilibrium_state(params, settings)
    return field.with_boundary_states(c_eq, c_eq)


def solve_timestep(params, prev, tau, newton=darcy.SCHEME_NEWTON):
    conv, diff = _coefficients(params)
    return darcy.solve_timestep(params, prev, tau, newton, conv, diff)


def run_regularized(params, initial, t_end, ctl=darcy.StepControl(), newton=darcy.SCHEME_NEWTON,
                    output_times=None, progress=None):
    if not params.eps > 0:
        raise ValueError("the regularized scheme needs eps > 0")
    conv, diff = _coefficients(params)
    return darcy.advance(params, initial, t_end, ctl, newton, output_times, conv, diff, progress)
