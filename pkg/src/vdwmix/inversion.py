"""Inversion of the map from densities to chemical potentials."""
from dataclasses import dataclass

import numpy as np

from .thermo import chemical_potentials, check_admissible, hessian, is_admissible


class InversionError(RuntimeError):
    def __init__(self, message, best_state=None, best_residual=np.inf):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_state = best_state
        self.best_residual = best_residual


@dataclass(frozen=True)
class InversionSettings:
    residual_tol: float = 1e-10
    max_iters: int = 100
    damping_halvings: int = 40

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.damping_halvings < 1:
            raise ValueError("damping_halvings must be at least 1")


def default_guess(params):
    return np.full(params.n, 1.0 / (2 * params.n * params.b.max()))


def phi_inverse(params, mu, guess=None, settings=InversionSettings()):
    """Densities c with chemical_potentials(c) = mu, by damped Newton.

    Every accepted iterate is admissible; a step is halved until the trial
    point is admissible and the residual max-norm does not grow.
    """
    mu = np.asarray(mu, dtype=float)
    c = default_guess(params) if guess is None else np.array(guess, dtype=float)
    check_admissible(params, c)
    r = chemical_potentials(params, c) - mu
    rnorm = np.max(np.abs(r))
    for _ in range(settings.max_iters):
        if rnorm <= settings.residual_tol:
            return c
        step = np.linalg.solve(hessian(params, c), -r)
        lam = 1.0
        for _ in range(settings.damping_halvings):
            trial = c + lam * step
            if is_admissible(params, trial):
                r_trial = chemical_potentials(params, trial) - mu
                n_trial = np.max(np.abs(r_trial))
                if n_trial <= rnorm:
                    break
            lam *= 0.5
        else:
            raise InversionError("damping exhausted", c, rnorm)
        c, r, rnorm = trial, r_trial, n_trial
    if rnorm <= settings.residual_tol:
        return c
    raise InversionError(f"no convergence in {settings.max_iters} iterations", c, rnorm)


def equilibrium_state(params, settings=InversionSettings()):
    """The state with all chemical potentials equal to zero."""
    return phi_inverse(params, np.zeros(params.n), default_guess(params), settings)
