import csv
import json
import os

import numpy as np
import pytest

from vdwmix import cli
from vdwmix.config import ConfigError, config_from_dict, load_config, load_preset, preset_data
from vdwmix.grid import DIRICHLET, NEUMANN
from vdwmix.runner import EXIT_ABORT, run_case
from vdwmix.thermo import ETA_LARGE
from vdwmix.verify import verify_suite


def small(case="I", **over):
    base = {"grid": {"N": 21}, "t_end": 0.02, "output_times": [0.0, 0.01, 0.02]}
    base.update(over)
    return config_from_dict(preset_data(case), base)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# -- config -------------------------------------------------------------------

def test_presets():
    c1 = load_preset("I")
    assert c1.grid.kind == NEUMANN and c1.grid.N == 201
    assert c1.control.tol_m == 4e-4 and c1.control.tol_M == 6e-4
    assert c1.params.a[0, 0] == 1e-3
    c2 = load_preset("II")
    assert c2.params.a[0, 0] == ETA_LARGE
    assert load_preset("III").grid.kind == DIRICHLET
    assert load_preset("IV").params.a[1, 1] == ETA_LARGE * 1.5
    with pytest.raises(KeyError):
        load_preset("V")


def test_all_violations_listed(tmp_path):
    bad = {"params": {"a": [[1, 2], [1, 1]], "b": [1, 0.5]}, "grid": {"N": 1},
           "control": {"tol_m": 1e-3, "tol_M": 1e-4}, "t_end": -1}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    v = exc.value.violations
    assert any("symmetric" in m for m in v)
    assert any(m.startswith("StepControl") for m in v)
    assert any("N" in m for m in v) and any("t_end" in m for m in v)


def test_parse_error(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="parse"):
        load_config(path)


def test_output_times_checked():
    with pytest.raises(ConfigError, match="output_times"):
        small(output_times=[0.0, 5.0])


# -- runs and files -----------------------------------------------------------

def test_run_case_files(tmp_path):
    cfg = small()
    status, rep = run_case(cfg, tmp_path)
    assert status == 0
    snap = read_csv(tmp_path / "snapshots.csv")
    assert snap[0] == ["t", "x", "c_1", "c_2", "p"]
    assert len(snap) == 1 + 3 * 21
    en = read_csv(tmp_path / "energy.csv")
    assert en[0] == ["t", "H", "H_rel", "grad_p_norm", "tau", "rho", "newton_iters"]
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    for key in ("condition", "decay_fit_H_rel", "min_fraction", "functional_drifts", "mass_drift"):
        assert key in diag
    assert diag["energy_max_increase"] < 0


def test_csv_round_trip(tmp_path):
    from vdwmix.runner import simulate
    cfg = small()
    tr = simulate(cfg)
    run_case(cfg, tmp_path)
    rows = read_csv(tmp_path / "snapshots.csv")[1:]
    last = [r for r in rows if float(r[0]) == tr.times[-1]]
    c = np.array([[float(r[2]) for r in last], [float(r[3]) for r in last]])
    assert np.array_equal(c, tr.states[-1])


def test_dirichlet_outputs_modified_energy(tmp_path):
    status, rep = run_case(small("III"), tmp_path)
    en = read_csv(tmp_path / "energy.csv")
    assert "H_tilde" in en[0]
    col = en[0].index("H_tilde")
    vals = np.array([float(r[col]) for r in en[1:]])
    assert np.max(np.diff(vals)) <= 1e-12
    assert rep["modified_energy"]["max_increase"] <= 1e-12


def test_zero_end_time(tmp_path):
    status, rep = run_case(small(t_end=0.0, output_times=[0.0]), tmp_path)
    assert status == 0 and rep["steps"] == 0
    assert len(read_csv(tmp_path / "snapshots.csv")) == 1 + 21
    assert len(read_csv(tmp_path / "energy.csv")) == 2


def test_abort_writes_partial(tmp_path):
    cfg = small(control={"tol_m": 1e-9, "tol_M": 2e-9, "tau_init": 1e-4, "tau_min": 1e-6})
    status, rep = run_case(cfg, tmp_path)
    assert status == EXIT_ABORT and rep["abort"]
    assert (tmp_path / "energy.csv").exists()


def test_regularized_config(tmp_path):
    cfg = small("III", params={"eps": 0.01}, boundary="equilibrium")
    status, rep = run_case(cfg, tmp_path)
    assert status == 0 and rep["mass_drift"] is None


def test_outputs_deterministic(tmp_path):
    cfg = small()
    run_case(cfg, tmp_path / "a")
    run_case(cfg, tmp_path / "b")
    for name in ("snapshots.csv", "energy.csv", "diagnostics.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# -- command line ---------------------------------------------------------------

def test_cli_simulate_and_codes(tmp_path, capsys):
    cfg = preset_data("I")
    cfg.update({"grid": {"N": 21, "kind": "neumann"}, "t_end": 0.01, "output_times": [0.0, 0.01]})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert os.path.exists(tmp_path / "o" / "snapshots.csv")
    cfg["control"]["tol_m"] = 1.0
    path.write_text(json.dumps(cfg))
    assert cli.main(["simulate", "--config", str(path), "--quiet"]) == 2
    assert "StepControl" in capsys.readouterr().err


def test_cli_scan(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(preset_data("I")))
    assert cli.main(["scan-hessian", "--config", str(path), "--resolution", "50", "--margin", "1e-3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["positive"] is True
    assert cli.main(["scan-hessian", "--config", str(path), "--resolution", "50", "--margin", "0.9"]) == 2


def test_verify_case1_passes():
    rep = verify_suite(0)
    assert rep["summary"]["fail"] == 0 and rep["summary"]["expected-fail"] == 0


def test_verify_double_eta_expected_fail():
    from vdwmix.thermo import case_params
    rep = verify_suite(0, case_params(2 * ETA_LARGE))
    scan = next(c for c in rep["checks"] if c["name"] == "hessian_positive_scan")
    assert scan["status"] == "expected-fail"
