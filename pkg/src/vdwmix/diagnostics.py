"""Energy, conserved quantities, decay fits and related checks on trajectories."""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .inversion import InversionSettings, equilibrium_state
from .thermo import chemical_potentials, check_admissible, free_energy, pressure


class FitError(ValueError):
    pass


class SingularSystemError(ValueError):
    pass


@dataclass
class EnergySeries:
    t: np.ndarray
    H: np.ndarray
    H_rel: np.ndarray
    grad_p_norm: np.ndarray

    def __post_init__(self):
        lengths = {len(self.t), len(self.H), len(self.H_rel), len(self.grad_p_norm)}
        if len(lengths) != 1:
            raise ValueError("energy series columns differ in length")


@dataclass(frozen=True)
class DecayFit:
    lam: float
    r_squared: float
    window: Tuple[float, float]
    degenerate: bool = False


def _integral(grid, values):
    return float(np.sum(values * grid.weights))


def _grad_p_norm(params, grid, c):
    p = pressure(params, c)
    # Neumann ghosts copy the end cells, so the end differences are zero
    dp = np.diff(p) / grid.h
    return float(np.sqrt(np.sum(dp**2) * grid.h))


def energy_series(params, traj):
    if not traj.states:
        raise ValueError("empty trajectory")
    g = traj.grid
    t = np.asarray(traj.times, dtype=float)
    H = np.array([_integral(g, free_energy(params, c)) for c in traj.states])
    gp = np.array([_grad_p_norm(params, g, c) for c in traj.states])
    return EnergySeries(t, H, H - H[-1], gp)


def modified_energy_coefficients(params, c_left, c_right):
    """(alpha_1, alpha_2) with alpha . c = c . mu(c) at both end states."""
    if params.n != 2:
        raise ValueError("modified energy is defined for two species")
    cl = check_admissible(params, np.asarray(c_left, dtype=float))
    cr = check_admissible(params, np.asarray(c_right, dtype=float))
    m = np.array([cl, cr])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) <= 1e-14 * np.abs(m).max() ** 2:
        raise SingularSystemError("end states have equal composition ratios")
    rhs = np.array([cl @ chemical_potentials(params, cl), cr @ chemical_potentials(params, cr)])
    return tuple(float(x) for x in np.linalg.solve(m, rhs))


def modified_energy_series(params, traj, coeffs):
    base = energy_series(params, traj)
    alpha = np.asarray(coeffs, dtype=float)
    if not np.any(alpha):
        return base
    g = traj.grid
    corr = np.array([_integral(g, alpha @ c) for c in traj.states])
    H = base.H - corr
    return EnergySeries(base.t, H, H - H[-1], base.grad_p_norm)


def conserved_functional(field, f):
    """Integral of ctot * f(c_1/ctot, ..., c_{n-1}/ctot).

    ``f`` receives the fractions with shape (n - 1, m) and returns m values.
    """
    c = field.c
    ctot = c.sum(axis=0)
    vals = np.broadcast_to(np.asarray(f(c[:-1] / ctot), dtype=float), ctot.shape)
    return _integral(field.grid, ctot * vals)


def min_fraction_monitor(traj, species):
    n = traj.states[0].shape[0]
    if not 0 <= species < n:
        raise IndexError(f"species index {species} out of range for n={n}")
    return float(min(np.min(c[species] / c.sum(axis=0)) for c in traj.states))


def decay_rate_fit(t, y, window):
    """Least-squares line through (t, log y) for t inside ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    t0, t1 = window
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < 3:
        raise FitError(f"need at least 3 samples in {window}, got {int(sel.sum())}")
    if np.any(y[sel] <= 0):
        raise FitError("nonpositive values inside the fit window")
    ts, ly = t[sel], np.log(y[sel])
    tc = ts - ts.mean()
    sxx = tc @ tc
    if sxx == 0:
        raise FitError("all samples share one time")
    slope = (tc @ (ly - ly.mean())) / sxx
    resid = ly - ly.mean() - slope * tc
    syy = np.sum((ly - ly.mean()) ** 2)
    if syy == 0:
        return DecayFit(float(-slope), 0.0, (t0, t1), degenerate=True)
    r2 = min(1.0, max(0.0, 1.0 - float(resid @ resid) / syy))
    return DecayFit(float(-slope), r2, (t0, t1))


def _psi(c, f):
    ctot = c.sum()
    return ctot * f(c[:-1] / ctot)


def homogeneity_identity_check(params, s, f):
    """max_i |sum_j c_j d^2 psi / dc_i dc_j| for psi(c) = ctot f(c_1/ctot, ...).

    psi is homogeneous of degree one, so the sum vanishes identically; the
    return value measures the finite-difference noise. The stencil runs in
    extended precision where numpy offers it.
    """
    check_admissible(params, np.asarray(s, dtype=float))
    c = np.asarray(s, dtype=np.longdouble)
    n = c.size
    h = 1e-5 * (1 + np.abs(c))
    hess = np.zeros((n, n), dtype=np.longdouble)
    for i in range(n):
        for j in range(i, n):
            def at(si, sj):
                d = np.zeros(n, dtype=np.longdouble)
                d[i] += si * h[i]
                d[j] += sj * h[j]
                return _psi(c + d, f)
            val = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return float(np.max(np.abs(hess @ c)))


def l2_distance_to_equilibrium(params, traj, settings=InversionSettings()):
    ceq = equilibrium_state(params, settings)
    g = traj.grid
    t = np.asarray(traj.times, dtype=float)
    d = np.array([np.sqrt(_integral(g, np.sum((c - ceq[:, None]) ** 2, axis=0)))
                  for c in traj.states])
    return t, d


def mass_drift(traj):
    """Largest relative change of each species' total mass over the run."""
    g = traj.grid
    m0 = np.array([_integral(g, row) for row in traj.states[0]])
    worst = np.zeros_like(m0)
    for c in traj.states[1:]:
        m = np.array([_integral(g, row) for row in c])
        worst = np.maximum(worst, np.abs(m - m0) / np.abs(m0))
    return worst


def max_increase(values):
    """Largest step-to-step increase of a series (negative when decreasing)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return -np.inf
    return float(np.max(np.diff(v)))

