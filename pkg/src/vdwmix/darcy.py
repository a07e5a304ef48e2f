"""Implicit upwind scheme for Darcy transport of the mixture (no diffusion).

Each species obeys d_t c_i + d_x(c_i v) = 0 with Darcy velocity v = -d_x p.
The flux at a cell interface picks the donor cell by the sign of the
discrete velocity, all quantities at the new time level, and the nonlinear
system per step is solved by damped Newton with the analytic block
tridiagonal Jacobian. Time steps adapt to the relative change between
consecutive iterates.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import NEUMANN, Field, extend
from .inversion import InversionSettings
from .thermo import check_admissible, is_admissible, pressure, pressure_derivatives

# tighter than the inversion default: per-step energy checks need round-off level residuals
SCHEME_NEWTON = InversionSettings(residual_tol=1e-12, max_iters=30, damping_halvings=30)


class StepError(RuntimeError):
    """Newton failed for one time step; the caller retries with a smaller step."""


class SolverAbort(RuntimeError):
    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class StepControl:
    tol_m: float = 4e-4
    tol_M: float = 6e-4
    grow: float = 1.25
    shrink: float = 0.5
    tau_init: float = 1e-5
    tau_min: float = 1e-12

    def violations(self):
        out = []
        if not 0 < self.tol_m < self.tol_M:
            out.append("StepControl: need 0 < tol_m < tol_M")
        if not self.grow > 1:
            out.append("StepControl: grow must exceed 1")
        if not 0 < self.shrink < 1:
            out.append("StepControl: shrink must lie in (0, 1)")
        if not self.tau_init > 0 or not self.tau_min > 0:
            out.append("StepControl: tau_init and tau_min must be positive")
        return out

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))


class Action(Enum):
    REJECT = "reject"
    KEEP = "keep"
    GROW = "grow"


@dataclass(frozen=True)
class StepDecision:
    action: Action
    tau: float


def adapt_dt(rho, tau, ctl):
    """Reject and shrink when rho >= tol_M, grow when rho < tol_m, else keep."""
    if rho >= ctl.tol_M:
        return StepDecision(Action.REJECT, tau * ctl.shrink)
    if rho < ctl.tol_m:
        return StepDecision(Action.GROW, tau * ctl.grow)
    return StepDecision(Action.KEEP, tau)


def relative_change(new, old):
    return float(np.sqrt(np.sum((new - old) ** 2) / np.sum(old**2)))


@dataclass
class StepStats:
    t: float
    tau: float
    rho: float
    newton_iters: int
    rejections: int


@dataclass
class Trajectory:
    """Every accepted time level of a run; rejected trials are never stored."""
    params: object
    grid: object
    boundary_states: Optional[tuple]
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    stats: List[StepStats] = field(default_factory=list)
    output_times: Optional[List[float]] = None
    config: dict = field(default_factory=dict)
    abort_reason: Optional[str] = None

    def field_at(self, k):
        return Field(self.grid, self.states[k], self.boundary_states)

    @property
    def final(self):
        return self.field_at(-1)

    def snapshot_indices(self):
        if self.output_times is None:
            return list(range(len(self.times)))
        t = np.asarray(self.times)
        return [int(np.argmin(np.abs(t - s))) for s in self.output_times]

    def snapshots(self):
        return [(self.times[k], self.field_at(k)) for k in self.snapshot_indices()]


# -- fluxes -----------------------------------------------------------------

def upwind_flux(c_left, c_right, p_left, p_right, h):
    """Donor-cell flux c v with v = -(p_right - p_left) / h."""
    if not h > 0:
        raise ValueError("h must be positive")
    v = -(p_right - p_left) / h
    return np.asarray(c_left) * max(v, 0.0) + np.asarray(c_right) * min(v, 0.0)


def interface_fluxes(params, cl, cr, h, conv=1.0, diff=0.0, jacobian=True):
    """Fluxes through a row of interfaces and their derivative blocks.

    ``cl``, ``cr`` have shape (n, m). The flux is
    conv * (cl v+ + cr v-) - diff * (cr - cl) / h. Returns J of shape (n, m)
    and, if requested, dJ/dcl and dJ/dcr of shape (m, n, n) with
    [k, i, j] = dJ_i / dc_j at interface k.
    """
    pl, pr = pressure(params, cl), pressure(params, cr)
    v = -(pr - pl) / h
    vp, vm = np.maximum(v, 0.0), np.minimum(v, 0.0)
    J = conv * (cl * vp + cr * vm) - diff * (cr - cl) / h
    if not jacobian:
        return J
    n, m = cl.shape
    up = np.where(v > 0, cl, np.where(v < 0, cr, 0.5 * (cl + cr)))
    dpl, dpr = pressure_derivatives(params, cl), pressure_derivatives(params, cr)
    eye = np.eye(n)[None]
    dl = conv * (vp[:, None, None] * eye + np.einsum("ik,jk->kij", up, dpl) / h) + diff / h * eye
    dr = conv * (vm[:, None, None] * eye - np.einsum("ik,jk->kij", up, dpr) / h) - diff / h * eye
    return J, dl, dr


def _all_fluxes(params, fld, conv, diff, jacobian=True):
    ce = extend(fld)
    out = interface_fluxes(params, ce[:, :-1], ce[:, 1:], fld.grid.h, conv, diff, jacobian)
    if fld.grid.kind == NEUMANN:
        # ghost copies make both end fluxes vanish identically
        if jacobian:
            J, dl, dr = out
            J[:, [0, -1]] = 0.0
            dl[[0, -1]] = 0.0
            dr[[0, -1]] = 0.0
        else:
            out[:, [0, -1]] = 0.0
    return out


def residual(params, prev, trial, tau, conv=1.0, diff=0.0):
    """(trial - prev) / tau + (J_{j+1/2} - J_{j-1/2}) / h at the unknowns."""
    check_admissible(params, trial.c)
    J = _all_fluxes(params, trial, conv, diff, jacobian=False)
    return (trial.unknowns() - prev.unknowns()) / tau + (J[:, 1:] - J[:, :-1]) / trial.grid.h


def _scaled_system(params, prev_u, fld, tau, conv, diff):
    """tau * residual and its sparse Jacobian in point-major ordering."""
    J, dl, dr = _all_fluxes(params, fld, conv, diff)
    u = fld.unknowns()
    n, P = u.shape
    r = tau / fld.grid.h
    F = u - prev_u + r * (J[:, 1:] - J[:, :-1])
    diag = np.eye(n)[None] + r * (dl[1:] - dr[:-1])
    upper = r * dr[1:-1]
    lower = -r * dl[1:-1]
    blocks = np.concatenate([diag, upper, lower])
    rows_b = np.concatenate([np.arange(P), np.arange(P - 1), np.arange(1, P)])
    cols_b = np.concatenate([np.arange(P), np.arange(1, P), np.arange(P - 1)])
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows = (rows_b[:, None, None] * n + ii[None]).ravel()
    cols = (cols_b[:, None, None] * n + jj[None]).ravel()
    jac = sp.csc_matrix((blocks.ravel(), (rows, cols)), shape=(n * P, n * P))
    return F.T.ravel(), jac


def solve_timestep(params, prev, tau, newton=SCHEME_NEWTON, conv=1.0, diff=0.0, fd_jacobian=False):
    """One implicit Euler step from ``prev``; returns (Field, newton_iters).

    Converged when max |tau * residual| <= residual_tol * (tau + max|prev|).
    Raises StepError when Newton stalls or leaves the admissible set.
    """
    prev_u = prev.unknowns()
    n, P = prev_u.shape
    tol = newton.residual_tol * (tau + np.max(np.abs(prev_u)))
    fld = prev
    F, jac = _scaled_system(params, prev_u, fld, tau, conv, diff)
    fnorm = np.max(np.abs(F))
    for it in range(newton.max_iters + 1):
        if fnorm <= tol:
            return fld, it
        if it == newton.max_iters:
            break
        if fd_jacobian:
            jac = _fd_jacobian(params, prev_u, fld, tau, conv, diff)
        try:
            du = spla.spsolve(jac, -F).reshape(P, n).T
        except RuntimeError as exc:
            raise StepError(f"linear solve failed: {exc}") from exc
        if not np.all(np.isfinite(du)):
            raise StepError("singular Newton system")
        lam = 1.0
        for _ in range(newton.damping_halvings):
            trial = fld.with_unknowns(fld.unknowns() + lam * du)
            if is_admissible(params, trial.c):
                F_t, jac_t = _scaled_system(params, prev_u, trial, tau, conv, diff)
                n_t = np.max(np.abs(F_t))
                if n_t <= fnorm:
                    break
            lam *= 0.5
        else:
            raise StepError("Newton damping exhausted")
        fld, F, jac, fnorm = trial, F_t, jac_t, n_t
    raise StepError(f"Newton did not converge in {newton.max_iters} iterations "
                    f"(residual {fnorm:.3e}, target {tol:.3e})")


def _fd_jacobian(params, prev_u, fld, tau, conv, diff, step=1e-7):
    # debugging aid: dense forward-difference Jacobian of the scaled residual
    F0, _ = _scaled_system(params, prev_u, fld, tau, conv, diff)
    u = fld.unknowns()
    n, P = u.shape
    cols = []
    for j in range(P):
        for i in range(n):
            du = np.zeros_like(u)
            du[i, j] = step * max(1.0, abs(u[i, j]))
            Fp, _ = _scaled_system(params, prev_u, fld.with_unknowns(u + du), tau, conv, diff)
            cols.append((Fp - F0) / du[i, j])
    return sp.csc_matrix(np.array(cols).T)


# -- time loop ----------------------------------------------------------------

def advance(params, initial, t_end, ctl=StepControl(), newton=SCHEME_NEWTON,
            output_times=None, conv=1.0, diff=0.0, progress=None):
    """Adaptive implicit Euler from t = 0 to t_end; shared by both schemes."""
    check_admissible(params, initial.c)
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    traj = Trajectory(params, initial.grid, initial.boundary_states,
                      output_times=None if output_times is None else list(output_times))
    traj.times.append(0.0)
    traj.states.append(initial.c.copy())
    t, tau, cur = 0.0, ctl.tau_init, initial
    rejections = 0
    while t < t_end * (1 - 1e-14):
        tau_try = min(tau, t_end - t)
        try:
            new, iters = solve_timestep(params, cur, tau_try, newton, conv, diff)
            rho = relative_change(new.unknowns(), cur.unknowns())
        except StepError:
            new, iters, rho = None, newton.max_iters, np.inf
        decision = adapt_dt(rho, tau_try, ctl)
        if decision.action is Action.REJECT:
            rejections += 1
            tau = decision.tau
            if tau < ctl.tau_min:
                traj.abort_reason = f"time step fell below tau_min at t={t!r}"
                raise SolverAbort(traj.abort_reason, traj)
            continue
        t = t_end if tau_try == t_end - t else t + tau_try
        cur = new
        traj.times.append(t)
        traj.states.append(cur.c.copy())
        traj.stats.append(StepStats(t, tau_try, rho, iters, rejections))
        rejections = 0
        if tau_try == tau:
            tau = decision.tau
        if progress is not None:
            progress(t, tau_try, rho)
    return traj


def run(params, initial, t_end, ctl=StepControl(), newton=SCHEME_NEWTON, output_times=None,
        progress=None):
    """The diffusion-free (eps = 0) transport run."""
    return advance(params, initial, t_end, ctl, newton, output_times, 1.0, 0.0, progress)
