import numpy as np
import pytest

from vdwmix import darcy
from vdwmix.grid import DIRICHLET, NEUMANN, Grid1D, ProfileRecipe, initial_profile
from vdwmix.thermo import ETA_LARGE, ETA_SMALL, case_params

CASES = {
    "I": (ETA_SMALL, NEUMANN),
    "II": (ETA_LARGE, NEUMANN),
    "III": (ETA_SMALL, DIRICHLET),
    "IV": (ETA_LARGE, DIRICHLET),
}

_RUNS = {}


def case_run(case, N=201, ctl=None, t_end=1.0):
    """Cached full run of one of the four shipped cases."""
    key = (case, N, ctl, t_end)
    if key not in _RUNS:
        eta, kind = CASES[case]
        params = case_params(eta)
        init = initial_profile(params, ProfileRecipe(), Grid1D(N, kind))
        _RUNS[key] = darcy.run(params, init, t_end, ctl or darcy.StepControl())
    return _RUNS[key]


@pytest.fixture
def case1():
    return case_params(ETA_SMALL)


@pytest.fixture
def case2():
    return case_params(ETA_LARGE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
