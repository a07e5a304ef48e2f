"""One-dimensional grids on (0, 1), fields and calibrated initial profiles.

Neumann problems live on the staggered grid of cell midpoints, where every
point is an unknown and boundary values are ghost copies. Dirichlet problems
use the nodes x_j = j h, j = 0..N, with the two end nodes held fixed.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .thermo import is_admissible, pressure

NEUMANN = "neumann"
DIRICHLET = "dirichlet"


class CalibrationError(RuntimeError):
    pass


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    N: int
    kind: str = NEUMANN

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.kind not in (NEUMANN, DIRICHLET):
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def nodes(self):
        if self.kind == NEUMANN:
            return (np.arange(1, self.N + 1) - 0.5) * self.h
        return np.arange(self.N + 1) * self.h

    @property
    def interior(self):
        """Slice of the node array holding the unknowns."""
        return slice(None) if self.kind == NEUMANN else slice(1, -1)

    @property
    def weights(self):
        """Quadrature weights: midpoint cells or trapezoid nodes."""
        w = np.full(self.nodes.size, self.h)
        if self.kind == DIRICHLET:
            w[[0, -1]] *= 0.5
        return w


@dataclass
class Field:
    grid: Grid1D
    c: np.ndarray
    boundary_states: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape[1] != self.grid.nodes.size:
            raise ValueError("field does not match grid size")
        if self.grid.kind == DIRICHLET:
            if self.boundary_states is None:
                self.boundary_states = (self.c[:, 0].copy(), self.c[:, -1].copy())
            left, right = (np.asarray(s, dtype=float) for s in self.boundary_states)
            self.boundary_states = (left, right)
            self.c[:, 0] = left
            self.c[:, -1] = right

    @property
    def n(self):
        return self.c.shape[0]

    def unknowns(self):
        return self.c[:, self.grid.interior]

    def with_unknowns(self, u):
        c = self.c.copy()
        c[:, self.grid.interior] = u
        return Field(self.grid, c, self.boundary_states)

    def with_boundary_states(self, left, right):
        if self.grid.kind != DIRICHLET:
            raise ValueError("boundary states only apply to Dirichlet grids")
        return Field(self.grid, self.c.copy(), (np.asarray(left, float), np.asarray(right, float)))


@dataclass(frozen=True)
class ProfileRecipe:
    # 2:1 contrast; species 1 accumulates at x = 1, species 2 at x = 0
    z_A: tuple = (1 / 3, 2 / 3)
    z_B: tuple = (2 / 3, 1 / 3)
    exponents: tuple = (10.0, 0.1)
    p_target: float = 1.0

    def violations(self):
        out = []
        for name in ("z_A", "z_B"):
            z = np.asarray(getattr(self, name), dtype=float)
            if np.any(z <= 0) or (z.size > 1 and np.any(z >= 1)):
                out.append(f"{name} fractions must lie in (0, 1)")
            if abs(z.sum() - 1.0) > 1e-12:
                out.append(f"{name} fractions must sum to 1")
        if len(self.z_A) != len(self.z_B) or len(self.exponents) != len(self.z_A):
            out.append("z_A, z_B and exponents must have equal length")
        if any(e <= 0 for e in self.exponents):
            out.append("exponents must be positive")
        if not self.p_target > 0:
            out.append("p_target must be positive")
        return out


def calibrate_endpoint(params, z, p_target=1.0, tol=1e-12):
    """State c = ctot z with pressure(c) = p_target, by bisection on ctot."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or abs(z.sum() - 1.0) > 1e-12:
        raise ValueError("z must be positive fractions summing to one")
    if not p_target > 0:
        raise ValueError("p_target must be positive")
    lo, hi = 0.0, (1.0 - 1e-12) / (params.b @ z)
    if pressure(params, hi * z) < p_target:
        raise CalibrationError("target pressure not reached below covolume saturation")
    f_lo = -p_target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = pressure(params, mid * z) - p_target
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    ctot = 0.5 * (lo + hi)
    c = ctot * z
    if abs(pressure(params, c) - p_target) > tol * max(1.0, p_target):
        raise CalibrationError("bisection did not reach the target pressure")
    return c


def profile_function(c_A, c_B, exponents):
    c_A, c_B = np.asarray(c_A, float), np.asarray(c_B, float)
    e = np.asarray(exponents, float)

    def profile(x):
        x = np.asarray(x, dtype=float)
        return c_A[:, None] + (c_B - c_A)[:, None] * x[None, :] ** e[:, None]

    return profile


def initial_profile(params, recipe, grid):
    c_A = calibrate_endpoint(params, recipe.z_A, recipe.p_target)
    c_B = calibrate_endpoint(params, recipe.z_B, recipe.p_target)
    prof = profile_function(c_A, c_B, recipe.exponents)
    if grid.kind == NEUMANN:
        edges = np.arange(grid.N + 1) * grid.h
        vals = prof(edges)
        c = 0.5 * (vals[:, 1:] + vals[:, :-1])
    else:
        c = prof(grid.nodes)
        c[:, 0], c[:, -1] = c_A, c_B
    if not is_admissible(params, c):
        raise ProfileError("initial profile leaves the admissible set")
    return Field(grid, c, (c_A, c_B) if grid.kind == DIRICHLET else None)


def constant_field(grid, state):
    state = np.asarray(state, dtype=float)
    c = np.repeat(state[:, None], grid.nodes.size, axis=1)
    return Field(grid, c)


def extend(field):
    """Densities with one ghost/boundary column on each side of the unknowns."""
    if field.grid.kind == NEUMANN:
        return np.concatenate([field.c[:, :1], field.c, field.c[:, -1:]], axis=1)
    return field.c


def ghost_values(field, p_values):
    """Left/right ghost states and pressures for the flux at the two ends.

    ``p_values`` are pressures at the field's points. On Neumann grids the
    ghosts copy the first/last cells; on Dirichlet grids they are the fixed
    boundary data.
    """
    p_values = np.asarray(p_values, dtype=float)
    if field.grid.kind == NEUMANN:
        return ((field.c[:, 0].copy(), field.c[:, -1].copy()),
                (float(p_values[0]), float(p_values[-1])))
    left, right = field.boundary_states
    return (left.copy(), right.copy()), (float(p_values[0]), float(p_values[-1]))
