"""Van der Waals mixture thermodynamics.

Pointwise evaluation of the Helmholtz free energy density, chemical
potentials, pressure and their derivatives for an isothermal mixture of
``n`` species with covolumes ``b`` and attraction matrix ``a``.

State arrays hold the species on the first axis, so ``c`` may be a single
state of shape ``(n,)`` or a field of shape ``(n, m)``; the field-level
functions broadcast over the trailing axes.
"""
from dataclasses import dataclass
import itertools

import numpy as np


class DomainError(ValueError):
    """A state lies outside the admissible set {c_i > 0, sum b_i c_i < 1}."""


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class MixtureParams:
    a: np.ndarray
    b: np.ndarray
    eps: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if a.ndim == 0:
            a = a.reshape(1, 1)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        problems = self.violations()
        if problems:
            raise ParameterError("; ".join(problems))
        a.setflags(write=False)
        b.setflags(write=False)

    @property
    def n(self):
        return self.b.size

    def violations(self):
        """List every violated parameter invariant (empty when valid)."""
        a, b = self.a, self.b
        out = []
        if b.size < 1:
            out.append("b must have at least one entry")
        if a.shape != (b.size, b.size):
            out.append(f"a must be {b.size}x{b.size}, got shape {a.shape}")
        else:
            if not np.array_equal(a, a.T):
                out.append("a must be symmetric")
            if not np.all(a > 0):
                out.append("all a_ij must be positive")
        if not np.all(b > 0):
            out.append("all b_i must be positive")
        if not self.alpha > 0:
            out.append("alpha must be positive")
        if not self.beta >= 0:
            out.append("beta must be nonnegative")
        if not self.eps >= 0:
            out.append("eps must be nonnegative")
        return out

    def with_(self, **changes):
        kw = dict(a=self.a, b=self.b, eps=self.eps, alpha=self.alpha, beta=self.beta)
        kw.update(changes)
        return MixtureParams(**kw)


def case_params(eta, eps=0.0, alpha=1.0, beta=0.0):
    """Two-species parameter set b = (1, 1/2), a = eta * [[1, 1], [1, 3/2]]."""
    a = eta * np.array([[1.0, 1.0], [1.0, 1.5]])
    return MixtureParams(a=a, b=[1.0, 0.5], eps=eps, alpha=alpha, beta=beta)


ETA_SMALL = 1e-3
ETA_LARGE = 1.185186593672589


# -- admissibility -----------------------------------------------------------

def _bcol(v, c):
    return np.reshape(v, (-1,) + (1,) * (np.ndim(c) - 1))


def check_admissible(params, c):
    c = np.asarray(c, dtype=float)
    if c.shape[0] != params.n:
        raise DomainError(f"state has {c.shape[0]} species, expected {params.n}")
    if not np.all(c > 0):
        raise DomainError("positivity violated: some c_i <= 0")
    fill = params.b @ c
    if not np.all(fill < 1):
        raise DomainError("covolume constraint violated: sum b_i c_i >= 1")
    return c


def is_admissible(params, c):
    c = np.asarray(c, dtype=float)
    return bool(np.all(c > 0) and np.all(params.b @ c < 1))


def _common(params, c):
    c = check_admissible(params, c)
    sigma = 1.0 / (1.0 - params.b @ c)
    ctot = c.sum(axis=0)
    return c, sigma, ctot


def _attraction(params, c):
    # sum_ij a_ij c_i c_j, broadcast over trailing axes
    return np.einsum("i...,ij,j...->...", c, params.a, c)


# -- thermodynamic functions -------------------------------------------------

def pressure(params, c):
    c, sigma, ctot = _common(params, c)
    return ctot * sigma - _attraction(params, c)


def chemical_potentials(params, c):
    c, sigma, ctot = _common(params, c)
    ac = np.tensordot(params.a, c, axes=1)
    return (np.log(c) + np.log(sigma) + _bcol(params.b, c) * (ctot * sigma)
            - 2.0 * ac)


def free_energy(params, c):
    c, sigma, ctot = _common(params, c)
    return (np.sum(c * (np.log(c) - 1.0), axis=0) + ctot * np.log(sigma)
            - _attraction(params, c))


def pressure_derivatives(params, c):
    """Gradient of the pressure with respect to the densities."""
    c, sigma, ctot = _common(params, c)
    ac = np.tensordot(params.a, c, axes=1)
    return sigma + _bcol(params.b, c) * (ctot * sigma**2) - 2.0 * ac


def hessian(params, c):
    """Hessian of the free energy density at a single state.

    The attraction contributes -2 a_ij, which is what differentiating the
    chemical potentials gives.
    """
    c, sigma, ctot = _common(params, np.asarray(c, dtype=float).ravel())
    b = params.b
    h = (np.add.outer(b, b) * sigma + np.outer(b, b) * ctot * sigma**2
         - 2.0 * params.a)
    h[np.diag_indices_from(h)] += 1.0 / c
    return h


def hessian_batch(params, states):
    """Hessians for states stacked as rows, shape (m, n) -> (m, n, n)."""
    states = np.asarray(states, dtype=float)
    check_admissible(params, states.T)
    b = params.b
    sigma = 1.0 / (1.0 - states @ b)
    ctot = states.sum(axis=1)
    h = (np.add.outer(b, b)[None] * sigma[:, None, None]
         + np.outer(b, b)[None] * (ctot * sigma**2)[:, None, None]
         - 2.0 * params.a[None])
    idx = np.arange(params.n)
    h[:, idx, idx] += 1.0 / states
    return h


def dtilde(params, c):
    """Coefficient of the pressure Laplacian: sum_ij c_i c_j (en'')_ij."""
    c, sigma, ctot = _common(params, c)
    return ctot * sigma**2 - 2.0 * _attraction(params, c)


# -- condition constants and eigenvalues --------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    """Largest attraction eigenvalue and the derived convexity constants.

    kappa = min b / (16 max b) - m lambda_star / min b, with m = 1 for
    ``kappa_uncorrected`` and m = 2 for ``kappa_corrected``; only the latter
    is consistent with the -2 a_ij term of the Hessian. K = 1 - max a_ij / b_i.
    """
    lambda_star: float
    kappa_uncorrected: float
    kappa_corrected: float
    K: float

    def as_dict(self):
        return {"lambda_star": self.lambda_star, "kappa_uncorrected": self.kappa_uncorrected,
                "kappa_corrected": self.kappa_corrected, "K": self.K}


def jacobi_eigenvalues(mats, tol=1e-13, max_sweeps=60):
    """Eigenvalues of a stack of symmetric matrices by cyclic Jacobi rotations.

    ``mats`` has shape (n, n) or (m, n, n); the rotations are applied to the
    whole stack at once. Returns ascending eigenvalues with shape (n,) or
    (m, n).
    """
    a = np.array(mats, dtype=float)
    single = a.ndim == 2
    if single:
        a = a[None]
    n = a.shape[-1]
    scale = np.maximum(1.0, np.sqrt(np.sum(a**2, axis=(1, 2))))
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[:, off_mask] ** 2, axis=1))
        if np.all(off < tol * scale):
            break
        for p, q in itertools.combinations(range(n), 2):
            apq = a[:, p, q]
            nz = apq != 0.0
            if not nz.any():
                continue
            theta = np.where(nz, (a[:, q, q] - a[:, p, p]) / (2.0 * np.where(nz, apq, 1.0)), 0.0)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta**2 + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(nz, t, 0.0)
            cs = 1.0 / np.sqrt(t**2 + 1.0)
            sn = t * cs
            cs, sn = cs[:, None], sn[:, None]
            colp, colq = a[:, :, p].copy(), a[:, :, q].copy()
            a[:, :, p] = cs * colp - sn * colq
            a[:, :, q] = sn * colp + cs * colq
            rowp, rowq = a[:, p, :].copy(), a[:, q, :].copy()
            a[:, p, :] = cs * rowp - sn * rowq
            a[:, q, :] = sn * rowp + cs * rowq
    ev = np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)
    return ev[0] if single else ev


def symmetric_eigenvalues(mats):
    """Ascending eigenvalues; closed form for 2x2, Jacobi otherwise."""
    a = np.asarray(mats, dtype=float)
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, :].copy()
    if n == 2:
        p, q, r = a[..., 0, 0], a[..., 1, 1], a[..., 0, 1]
        mid = 0.5 * (p + q)
        rad = np.hypot(0.5 * (p - q), r)
        return np.stack([mid - rad, mid + rad], axis=-1)
    return jacobi_eigenvalues(a)


def condition_constants(params):
    b = params.b
    lam = float(symmetric_eigenvalues(params.a)[-1])
    ratio = b.min() / b.max() / 16.0
    return ConditionReport(
        lambda_star=lam,
        kappa_uncorrected=ratio - lam / b.min(),
        kappa_corrected=ratio - 2.0 * lam / b.min(),
        K=1.0 - float(np.max(params.a / b[:, None])),
    )


def _fraction_lattice(n, resolution):
    if n == 1:
        return np.ones((1, 1))
    rows = []
    for cut in itertools.combinations(range(1, resolution), n - 1):
        edges = (0,) + cut + (resolution,)
        rows.append(np.diff(edges))
    return np.array(rows, dtype=float) / resolution


def hessian_min_scan(params, resolution=200, margin=1e-3, chunk=50_000):
    """Smallest Hessian eigenvalue over a uniform grid of admissible states.

    The grid is a product of a mass-fraction lattice (``resolution``
    divisions of the simplex) and ``resolution`` total-density levels between
    the bounds imposed by c_i >= margin and sum b_i c_i <= 1 - margin.
    """
    n = params.n
    if resolution < 2:
        raise ParameterError("resolution must be at least 2")
    if not 0 < margin < 1.0 / (2 * n * params.b.max()):
        raise ParameterError("margin must lie in (0, 1/(2 n max b))")
    z = _fraction_lattice(n, resolution)
    lo = margin / z.min(axis=1)
    hi = (1.0 - margin) / (z @ params.b)
    keep = lo <= hi
    if not keep.any():
        raise ParameterError("scan region is empty")
    z, lo, hi = z[keep], lo[keep], hi[keep]
    s = np.linspace(0.0, 1.0, resolution)
    ctot = lo[:, None] + s[None, :] * (hi - lo)[:, None]
    states = (z[:, None, :] * ctot[:, :, None]).reshape(-1, n)
    best = np.inf
    for start in range(0, len(states), chunk):
        block = states[start:start + chunk]
        ev = symmetric_eigenvalues(hessian_batch(params, block))[:, 0]
        best = min(best, float(ev.min()))
    return best


def two_vector_inequality_check(alpha, beta, v):
    """Both sides of (a.v)^2 + |v - (b.v) b|^2 >= (a.b)^2 |v|^2 / 4 for unit a, b."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    v = np.asarray(v, dtype=float)
    for name, u in (("alpha", alpha), ("beta", beta)):
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError(f"{name} must be a unit vector")
    bv = beta @ v
    lhs = (alpha @ v) ** 2 + np.sum((v - bv * beta) ** 2)
    rhs = 0.25 * (alpha @ beta) ** 2 * (v @ v)
    return float(lhs), float(rhs)
