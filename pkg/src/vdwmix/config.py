"""Run configuration: JSON loading, validation and the shipped presets."""
from dataclasses import dataclass, field
import json
from importlib import resources
from typing import List, Optional

import numpy as np

from .darcy import StepControl
from .grid import DIRICHLET, NEUMANN, Grid1D, ProfileRecipe
from .thermo import MixtureParams

PRESETS = {"I": "case1.json", "II": "case2.json", "III": "case3.json", "IV": "case4.json"}
BOUNDARY_MODES = ("recipe", "equilibrium")


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


@dataclass
class RunConfig:
    params: MixtureParams
    grid: Grid1D
    control: StepControl
    recipe: ProfileRecipe
    t_end: float
    output_times: List[float]
    output_dir: str = "out"
    seed: int = 0
    boundary: str = "recipe"
    name: str = ""
    raw: dict = field(default_factory=dict, repr=False)


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _section(data, key, errors):
    sec = data.get(key)
    if not isinstance(sec, dict):
        errors.append(f"{key}: missing or not an object")
        return None
    return sec


def _build(errors, ctor, label, **kw):
    # collect the invariant messages instead of stopping at the first one
    try:
        obj = object.__new__(ctor)
        for k, v in kw.items():
            object.__setattr__(obj, k, v)
        problems = obj.violations()
    except (TypeError, ValueError) as exc:
        errors.append(f"{label}: {exc}")
        return None
    if problems:
        errors.extend(p if p.startswith(label) else f"{label}: {p}" for p in problems)
        return None
    try:
        return ctor(**kw)
    except (TypeError, ValueError) as exc:
        errors.append(f"{label}: {exc}")
        return None


def _params(sec, errors):
    try:
        a = np.array(sec.get("a"), dtype=float)
        b = np.array(sec.get("b"), dtype=float).ravel()
    except (TypeError, ValueError):
        errors.append("params: a and b must be numeric arrays")
        return None
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if "n" in sec and sec["n"] != b.size:
        errors.append(f"params: n = {sec['n']} but b has {b.size} entries")
    extra = {k: sec.get(k, d) for k, d in (("eps", 0.0), ("alpha", 1.0), ("beta", 0.0))}
    for k, v in extra.items():
        if not _num(v):
            errors.append(f"params: {k} must be a number")
            return None
    return _build(errors, MixtureParams, "params", a=a, b=b, **{k: float(v) for k, v in extra.items()})


def validate(data):
    """RunConfig from a parsed JSON object; raises ConfigError listing all problems."""
    errors = []
    if not isinstance(data, dict):
        raise ConfigError(["top level must be an object"])
    params = grid = ctl = recipe = None

    sec = _section(data, "params", errors)
    if sec is not None:
        params = _params(sec, errors)

    sec = _section(data, "grid", errors)
    if sec is not None:
        N, kind = sec.get("N"), sec.get("kind", NEUMANN)
        if not isinstance(N, int) or isinstance(N, bool) or N < 2:
            errors.append("grid: N must be an integer >= 2")
        elif kind not in (NEUMANN, DIRICHLET):
            errors.append(f"grid: kind must be {NEUMANN!r} or {DIRICHLET!r}")
        else:
            grid = Grid1D(N, kind)

    sec = _section(data, "control", errors)
    if sec is not None:
        known = ("tol_m", "tol_M", "tau_init", "grow", "shrink", "tau_min")
        unknown = sorted(set(sec) - set(known))
        if unknown:
            errors.append(f"StepControl: unknown keys {unknown}")
        if all(_num(sec[k]) for k in sec if k in known):
            ctl = _build(errors, StepControl, "StepControl",
                         **{**StepControl().__dict__, **{k: float(sec[k]) for k in sec if k in known}})
        else:
            errors.append("StepControl: values must be numbers")

    sec = data.get("recipe", {})
    if not isinstance(sec, dict):
        errors.append("recipe: must be an object")
    else:
        d = ProfileRecipe()
        try:
            kw = dict(z_A=tuple(float(x) for x in sec.get("z_A", d.z_A)),
                      z_B=tuple(float(x) for x in sec.get("z_B", d.z_B)),
                      exponents=tuple(float(x) for x in sec.get("exponents", d.exponents)),
                      p_target=float(sec.get("p_target", d.p_target)))
        except (TypeError, ValueError):
            errors.append("recipe: entries must be numbers")
        else:
            recipe = _build(errors, ProfileRecipe, "recipe", **kw)
    if params is not None and recipe is not None and len(recipe.z_A) != params.n:
        errors.append(f"recipe: fractions have {len(recipe.z_A)} entries, mixture has {params.n}")

    t_end = data.get("t_end")
    if not _num(t_end) or t_end < 0:
        errors.append("t_end must be a nonnegative number")
        t_end = None
    out_t = data.get("output_times", [0.0] if t_end is None else [0.0, t_end])
    if not isinstance(out_t, list) or not all(_num(x) for x in out_t):
        errors.append("output_times must be a list of numbers")
        out_t = []
    elif t_end is not None and any(x < 0 or x > t_end for x in out_t):
        errors.append("output_times must lie in [0, t_end]")

    boundary = data.get("boundary", "recipe")
    if boundary not in BOUNDARY_MODES:
        errors.append(f"boundary must be one of {BOUNDARY_MODES}")
    elif boundary == "equilibrium" and grid is not None and grid.kind != DIRICHLET:
        errors.append("boundary 'equilibrium' needs a dirichlet grid")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append("seed must be a nonnegative integer")
    out_dir = data.get("output_dir", "out")
    if not isinstance(out_dir, str):
        errors.append("output_dir must be a string")

    if errors:
        raise ConfigError(errors)
    return RunConfig(params, grid, ctl, recipe, float(t_end), [float(x) for x in out_t],
                     out_dir, seed, boundary, str(data.get("name", "")), data)


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return validate(data)


def preset_data(case):
    if case not in PRESETS:
        raise KeyError(f"unknown case {case!r}; choose from {sorted(PRESETS)}")
    text = resources.files("vdwmix.presets").joinpath(PRESETS[case]).read_text()
    return json.loads(text)


def load_preset(case):
    return validate(preset_data(case))


def config_from_dict(data: dict, overrides: Optional[dict] = None):
    """Validate a config dict after shallow-merging ``overrides`` per section."""
    merged = json.loads(json.dumps(data))
    for k, v in (overrides or {}).items():
        if isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k].update(v)
        else:
            merged[k] = v
    return validate(merged)
