"""Run a configured scenario and write its CSV and JSON outputs."""
import csv
import json
import math
import os

import numpy as np

from . import darcy, regularized
from . import diagnostics as dg
from .grid import DIRICHLET, NEUMANN, initial_profile
from .thermo import condition_constants, pressure

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 2, 3
FIT_WINDOW = (0.05, 0.5)


def fmt(x):
    """Shortest round-trip decimal for floats; integers unchanged."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def initial_field(cfg):
    fld = initial_profile(cfg.params, cfg.recipe, cfg.grid)
    if cfg.boundary == "equilibrium":
        fld = regularized.equilibrium_boundary(cfg.params, fld)
    return fld


def simulate(cfg, progress=None):
    """Trajectory for ``cfg``; raises darcy.SolverAbort with the partial run."""
    init = initial_field(cfg)
    if cfg.params.eps > 0:
        return regularized.run_regularized(cfg.params, init, cfg.t_end, cfg.control,
                                           output_times=cfg.output_times, progress=progress)
    return darcy.run(cfg.params, init, cfg.t_end, cfg.control,
                     output_times=cfg.output_times, progress=progress)


def _fit(t, y):
    try:
        fit = dg.decay_rate_fit(t, y, FIT_WINDOW)
    except dg.FitError as exc:
        return {"error": str(exc)}
    return {"lambda": fit.lam, "r_squared": fit.r_squared, "window": list(fit.window),
            "degenerate": fit.degenerate}


def _functional_drifts(traj):
    fams = {"z_squared": lambda z: z[0] ** 2, "cubic_below_half": lambda z: np.maximum(0.5 - z[0], 0.0) ** 3}
    out = {}
    for name, f in fams.items():
        f0 = dg.conserved_functional(traj.field_at(0), f)
        f1 = dg.conserved_functional(traj.final, f)
        out[name] = {"initial": f0, "final": f1, "relative_drift": abs(f1 - f0) / abs(f0) if f0 else None}
    return out


def diagnostics_report(cfg, traj):
    params = cfg.params
    es = dg.energy_series(params, traj)
    rep = {"name": cfg.name, "condition": condition_constants(params).as_dict(),
           "steps": len(traj.times) - 1,
           "rejections": int(sum(s.rejections for s in traj.stats)),
           "t_final": traj.times[-1],
           "energy_max_increase": dg.max_increase(es.H),
           "decay_fit_H_rel": _fit(es.t, es.H_rel),
           "decay_fit_grad_p": _fit(es.t, es.grad_p_norm),
           "min_fraction": [dg.min_fraction_monitor(traj, i) for i in range(params.n)],
           "abort": traj.abort_reason}
    p_final = pressure(params, traj.final.c)
    rep["final_pressure_span"] = float((p_final.max() - p_final.min()) / abs(p_final.mean()))
    if params.n >= 2:
        rep["functional_drifts"] = _functional_drifts(traj)
    if cfg.grid.kind == NEUMANN and params.eps == 0:
        rep["mass_drift"] = dg.mass_drift(traj).tolist()
    else:
        rep["mass_drift"] = None
    tilde = _modified(cfg, traj)
    if tilde is not None:
        coeffs, mod = tilde
        rep["modified_energy"] = {"coefficients": list(coeffs), "max_increase": dg.max_increase(mod.H),
                                  "decay_fit": _fit(mod.t, mod.H_rel)}
    try:
        t, d = dg.l2_distance_to_equilibrium(params, traj)
        rep["equilibrium_distance"] = {"final": float(d[-1]),
                                       "max_d2_times_1_plus_t": float(np.max(d**2 * (1 + t)))}
    except Exception as exc:  # monitored only; a failed inversion is reported
        rep["equilibrium_distance"] = {"error": str(exc)}
    return rep, es, tilde


def _modified(cfg, traj):
    if cfg.grid.kind != DIRICHLET or cfg.params.n != 2:
        return None
    left, right = traj.boundary_states
    try:
        coeffs = dg.modified_energy_coefficients(cfg.params, left, right)
    except dg.SingularSystemError:
        return None
    return coeffs, dg.modified_energy_series(cfg.params, traj, coeffs)


def write_outputs(cfg, traj, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rep, es, tilde = diagnostics_report(cfg, traj)
    n = cfg.params.n
    x = cfg.grid.nodes
    with open(os.path.join(out_dir, "snapshots.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x"] + [f"c_{i + 1}" for i in range(n)] + ["p"])
        for t, fld in traj.snapshots():
            p = pressure(cfg.params, fld.c)
            for j in range(x.size):
                w.writerow([fmt(t), fmt(x[j])] + [fmt(fld.c[i, j]) for i in range(n)] + [fmt(p[j])])
    with open(os.path.join(out_dir, "energy.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["t", "H", "H_rel"] + (["H_tilde"] if tilde else []) + ["grad_p_norm", "tau", "rho", "newton_iters"]
        w.writerow(head)
        for k in range(len(es.t)):
            row = [fmt(es.t[k]), fmt(es.H[k]), fmt(es.H_rel[k])]
            if tilde:
                row.append(fmt(tilde[1].H[k]))
            row.append(fmt(es.grad_p_norm[k]))
            if k == 0:
                row += ["", "", ""]
            else:
                s = traj.stats[k - 1]
                row += [fmt(s.tau), fmt(s.rho), fmt(s.newton_iters)]
            w.writerow(row)
    write_json(os.path.join(out_dir, "diagnostics.json"), rep)
    if cfg.raw:
        write_json(os.path.join(out_dir, "config.json"), cfg.raw)
    return rep


def run_case(cfg, out_dir=None, progress=None):
    """Simulate and write outputs; returns (exit status, diagnostics dict)."""
    out_dir = cfg.output_dir if out_dir is None else out_dir
    try:
        traj = simulate(cfg, progress)
        status = EXIT_OK
    except darcy.SolverAbort as exc:
        traj = exc.trajectory
        status = EXIT_ABORT
    rep = write_outputs(cfg, traj, out_dir)
    return status, rep
