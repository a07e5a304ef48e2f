import numpy as np
import pytest

from conftest import case_run
from vdwmix import darcy
from vdwmix.darcy import (
    Action, SolverAbort, StepControl, StepError, adapt_dt, relative_change, residual,
    solve_timestep, upwind_flux,
)
from vdwmix.grid import DIRICHLET, NEUMANN, Field, Grid1D, ProfileRecipe, constant_field, initial_profile
from vdwmix.thermo import free_energy, is_admissible, pressure


def field(params, N=21, kind=NEUMANN):
    return initial_profile(params, ProfileRecipe(), Grid1D(N, kind))


# -- flux ---------------------------------------------------------------------

def test_upwind_flux_examples():
    cl, cr = np.array([0.1, 0.2]), np.array([0.3, 0.4])
    assert np.array_equal(upwind_flux(cl, cr, 1.5, 1.5, 0.1), [0, 0])
    assert upwind_flux(cl, cr, 1.0, 2.0, 0.1) == pytest.approx(-10 * cr)
    assert upwind_flux(cl, cr, 2.0, 1.0, 0.1) == pytest.approx(10 * cl)
    with pytest.raises(ValueError):
        upwind_flux(cl, cr, 1, 2, 0.0)


# -- residual -----------------------------------------------------------------

@pytest.mark.parametrize("kind", [NEUMANN, DIRICHLET])
def test_residual_constant_field(case1, kind):
    f = constant_field(Grid1D(10, kind), [0.2, 0.3])
    assert np.array_equal(residual(case1, f, f, 0.1), np.zeros_like(f.unknowns()))


def test_residual_is_flux_divergence_when_trial_equals_prev(case1):
    f = field(case1)
    r = residual(case1, f, f, 0.37)
    h = f.grid.h
    c = f.c
    p = pressure(case1, c)
    J = np.zeros((2, c.shape[1] + 1))
    for k in range(1, c.shape[1]):
        J[:, k] = upwind_flux(c[:, k - 1], c[:, k], p[k - 1], p[k], h)
    assert r == pytest.approx((J[:, 1:] - J[:, :-1]) / h, rel=1e-12, abs=1e-12)


def test_residual_telescopes_on_neumann(case1, rng):
    prev = field(case1)
    trial = prev.with_unknowns(prev.unknowns() * (1 + 0.01 * rng.standard_normal(prev.c.shape)))
    tau, h = 0.01, prev.grid.h
    r = residual(case1, prev, trial, tau)
    assert np.sum(r) * h == pytest.approx(np.sum(trial.c - prev.c) * h / tau, rel=1e-10, abs=1e-13)


def test_residual_rejects_inadmissible(case1):
    f = field(case1)
    bad = f.with_unknowns(-f.unknowns())
    with pytest.raises(ValueError):
        residual(case1, f, bad, 0.1)


# -- Newton Jacobian: analytic blocks against finite differences -------------

@pytest.mark.parametrize("kind", [NEUMANN, DIRICHLET])
@pytest.mark.parametrize("conv, diff", [(1.0, 0.0), (1.3, 0.02)])
def test_jacobian_matches_fd(case2, kind, conv, diff, rng):
    prev = field(case2, N=8, kind=kind)
    cur = prev.with_unknowns(prev.unknowns() * (1 + 0.05 * rng.standard_normal(prev.unknowns().shape)))
    _, jac = darcy._scaled_system(case2, prev.unknowns(), cur, 0.01, conv, diff)
    fd = darcy._fd_jacobian(case2, prev.unknowns(), cur, 0.01, conv, diff, step=1e-7)
    assert np.max(np.abs(jac.toarray() - fd.toarray())) <= 1e-5 * np.max(np.abs(fd.toarray()))


# -- single steps -------------------------------------------------------------

def test_constant_prev_is_fixed_point(case1):
    f = constant_field(Grid1D(15), [0.2, 0.3])
    new, iters = solve_timestep(case1, f, 0.1)
    assert iters <= 1
    assert np.allclose(new.c, f.c, rtol=0, atol=1e-15)


def test_small_step_is_order_tau(case1):
    f = field(case1, N=51)
    tau = 1e-6
    new, _ = solve_timestep(case1, f, tau)
    div = -residual(case1, f, f, 1.0)
    # the implicit step moves by tau times the flux divergence, up to O(tau^2)
    assert np.max(np.abs(new.unknowns() - f.unknowns() - tau * div)) <= 0.05 * tau * np.max(np.abs(div))


def test_huge_step_stays_admissible(case1):
    f = field(case1, N=21)
    try:
        new, _ = solve_timestep(case1, f, 1e10)
    except StepError:
        return
    assert is_admissible(case1, new.c)


def test_fd_jacobian_switch_gives_same_step(case1):
    f = field(case1, N=9)
    a, _ = solve_timestep(case1, f, 1e-3)
    b, _ = solve_timestep(case1, f, 1e-3, fd_jacobian=True)
    assert np.max(np.abs(a.c - b.c)) <= 1e-10


def test_first_order_consistency(case1):
    # one step against four substeps; the defect per unit time halves with tau
    f = field(case1, N=51)

    def defect(tau):
        one, _ = solve_timestep(case1, f, tau)
        cur = f
        for _ in range(4):
            cur, _ = solve_timestep(case1, cur, tau / 4)
        return np.max(np.abs(one.c - cur.c)) / tau

    ratio = defect(1e-6) / defect(5e-7)
    assert 1.7 <= ratio <= 2.3


# -- step control -------------------------------------------------------------

def test_adapt_dt_examples():
    ctl = StepControl()
    d = adapt_dt(7e-4, 1.0, ctl)
    assert d.action is Action.REJECT and d.tau == 0.5
    d = adapt_dt(5e-4, 1.0, ctl)
    assert d.action is Action.KEEP and d.tau == 1.0
    d = adapt_dt(3e-4, 1.0, ctl)
    assert d.action is Action.GROW and d.tau == 1.25
    assert adapt_dt(6e-4, 1.0, ctl).action is Action.REJECT
    assert adapt_dt(4e-4, 1.0, ctl).action is Action.KEEP
    assert adapt_dt(np.inf, 1.0, ctl).action is Action.REJECT


def test_step_control_validation():
    with pytest.raises(ValueError, match="StepControl"):
        StepControl(tol_m=1e-3, tol_M=1e-4)
    with pytest.raises(ValueError):
        StepControl(grow=0.9)


def test_relative_change():
    a = np.array([[3.0, 0.0]])
    assert relative_change(np.array([[3.0, 4.0]]), a) == pytest.approx(4 / 3)


# -- whole runs ---------------------------------------------------------------

@pytest.mark.parametrize("kind", [NEUMANN, DIRICHLET])
def test_constant_run(case1, kind):
    f = constant_field(Grid1D(11, kind), [0.2, 0.3])
    tr = darcy.run(case1, f, 0.5)
    H = [np.sum(free_energy(case1, c) * f.grid.weights) for c in tr.states]
    assert all(np.allclose(c, f.c, rtol=0, atol=1e-14) for c in tr.states)
    assert np.ptp(H) <= 1e-14


def test_zero_end_time(case1):
    tr = darcy.run(case1, field(case1), 0.0)
    assert tr.times == [0.0] and len(tr.states) == 1 and not tr.stats


def test_run_hits_end_time_exactly(case1):
    tr = darcy.run(case1, field(case1, N=21), 0.0123)
    assert tr.times[-1] == 0.0123
    assert np.all(np.diff(tr.times) > 0)


def test_abort_keeps_partial_trajectory(case1):
    ctl = StepControl(tol_m=1e-9, tol_M=2e-9, tau_init=1e-4, tau_min=1e-6)
    with pytest.raises(SolverAbort) as exc:
        darcy.run(case1, field(case1, N=21), 1.0, ctl)
    tr = exc.value.trajectory
    assert tr.abort_reason and len(tr.states) >= 1
    assert all(s.rho < ctl.tol_M for s in tr.stats)


def test_snapshots_nearest_accepted(case1):
    tr = darcy.run(case1, field(case1, N=21), 0.01, output_times=[0.0, 0.004, 0.01])
    snaps = tr.snapshots()
    assert snaps[0][0] == 0.0 and snaps[-1][0] == 0.01
    k = tr.snapshot_indices()[1]
    assert abs(tr.times[k] - 0.004) == min(abs(t - 0.004) for t in tr.times)


def test_case1_run_contracts():
    tr = case_run("I")
    ctl = StepControl()
    g = tr.grid
    assert all(s.rho < ctl.tol_M for s in tr.stats)
    assert all(is_admissible(tr.params, c) for c in tr.states)
    masses = np.array([c.sum(axis=1) * g.h for c in tr.states])
    assert np.max(np.abs(masses - masses[0]) / masses[0]) <= 1e-10
    H = np.array([np.sum(free_energy(tr.params, c) * g.weights) for c in tr.states])
    assert np.max(np.diff(H)) <= 1e-12


def test_discrete_fraction_bounds_case1():
    # the same M-matrix acts on every species, so fractions stay in their initial range
    tr = case_run("I")
    z0 = tr.states[0][0] / tr.states[0].sum(axis=0)
    lo, hi = z0.min(), z0.max()
    for c in tr.states:
        z = c[0] / c.sum(axis=0)
        assert z.min() >= lo - 1e-10 and z.max() <= hi + 1e-10


def test_dirichlet_ends_fixed():
    tr = case_run("III")
    left, right = tr.boundary_states
    for c in tr.states:
        assert np.array_equal(c[:, 0], left) and np.array_equal(c[:, -1], right)


def test_field_dirichlet_forces_ends(case1):
    g = Grid1D(4, DIRICHLET)
    f = Field(g, np.full((2, 5), 0.2), (np.array([0.1, 0.1]), np.array([0.3, 0.3])))
    assert np.array_equal(f.c[:, 0], [0.1, 0.1]) and np.array_equal(f.c[:, -1], [0.3, 0.3])
