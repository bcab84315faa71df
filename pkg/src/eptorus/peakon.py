"""Periodic peakons and a quadrature check of their weak formulation.

The profile ``Phi(z) = cosh(1/2 - {z}) / sinh(1/2)`` has unit period and a
kink at the integers.  ``weak_residual`` evaluates, for a smooth test field
``phi`` vanishing at ``t = T``,

    int int (u . phi_t + grad u : grad phi_t)
  + int (u0 . phi(0) + grad u0 : grad phi(0))
  + int int T^a_ij d_j phi^i
  + int int u^j d_k u^i d_jk phi^i

with ``T^a = u u^T + (grad u)(grad u)^T - (grad u)^T (grad u)
+ (|u|^2 + |grad u|^2) Id / 2`` and ``(grad u)_ik = d_k u^i``.  Every
integrand involves only ``u`` and ``grad u``, which are bounded, so plain
quadrature applies once cell boundaries sit on the kink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .scenarios import PeakonParams

SINH_HALF = math.sinh(0.5)
GAUSS_NODES = np.array([-1.0, 1.0]) / math.sqrt(3.0)
GAUSS_WEIGHTS = np.array([1.0, 1.0])


def phi_eval(z) -> np.ndarray | float:
    """Unit-periodic peak profile, ``Phi(0) = coth(1/2)``."""
    z = np.asarray(z, dtype=float)
    frac = z - np.floor(z)
    out = np.cosh(0.5 - frac) / SINH_HALF
    return float(out) if out.ndim == 0 else out


def phi_prime(z) -> np.ndarray | float:
    """Derivative of ``Phi``; at the kink the right-sided value is returned."""
    z = np.asarray(z, dtype=float)
    frac = z - np.floor(z)
    out = -np.sinh(0.5 - frac) / SINH_HALF
    return float(out) if out.ndim == 0 else out


def phi_fourier(k) -> np.ndarray:
    """Fourier coefficients ``int_0^1 Phi(z) e^{-2 pi i k z} dz = 2 / (1 + 4 pi^2 k^2)``."""
    k = np.asarray(k, dtype=float)
    return 2.0 / (1.0 + 4.0 * np.pi**2 * k**2)


def peakon_field(params: PeakonParams, t: float, x) -> np.ndarray:
    """Velocity ``M Phi(a.x - C t)`` at points ``x`` (shape ``(..., d)``)."""
    x = np.asarray(x, dtype=float)
    val = params.M * phi_eval(x @ params.a - params.C * t)
    return np.repeat(np.asarray(val)[..., None], params.d, axis=-1)


# --- test fields ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TestField:
    """``phi^i(t, x) = q(t) sum_k (A_ik cos 2pi k.x + B_ik sin 2pi k.x)``.

    ``q(t) = (T - t)(c0 + c1 t + c2 t^2)`` so ``phi(T, .) = 0`` exactly.
    """

    __test__ = False  # not a pytest class

    seed: int
    T: float
    modes: np.ndarray  # (nm, d) integer wave vectors
    A: np.ndarray  # (d, nm)
    B: np.ndarray  # (d, nm)
    q_coef: np.ndarray  # (3,)

    @property
    def d(self) -> int:
        return self.modes.shape[1]

    def scaled(self, alpha: float) -> TestField:
        return replace(self, A=alpha * self.A, B=alpha * self.B)

    def q(self, t: float) -> tuple[float, float]:
        c0, c1, c2 = self.q_coef
        p = c0 + t * (c1 + t * c2)
        dp = c1 + 2.0 * c2 * t
        return (self.T - t) * p, -p + (self.T - t) * dp

    def spatial(self, x: np.ndarray):
        """Spatial factor, its gradient and Hessian at points ``x`` (P, d).

        Shapes: ``(P, d)``, ``(P, d, d)`` with ``[., i, k] = d_k``, and
        ``(P, d, d, d)`` with ``[., i, j, k] = d_jk``.
        """
        kv = 2 * np.pi * self.modes.astype(float)
        theta = x @ kv.T
        c, s = np.cos(theta), np.sin(theta)
        val = c @ self.A.T + s @ self.B.T
        dc = -s[:, None, :] * kv.T[None]  # (P, k, nm)
        ds = c[:, None, :] * kv.T[None]
        grad = np.einsum("pkm,im->pik", dc, self.A) + np.einsum("pkm,im->pik", ds, self.B)
        kk = np.einsum("mj,mk->jkm", kv, kv)
        hess = -(np.einsum("pm,jkm,im->pijk", c, kk, self.A)
                 + np.einsum("pm,jkm,im->pijk", s, kk, self.B))
        return val, grad, hess


def make_test_field(seed: int, T: float, d: int = 2, degree: int = 3) -> TestField:
    """Seeded smooth test field with trig degree ``<= degree`` per axis."""
    if not T > 0:
        raise ValueError("T must be positive")
    rng = np.random.default_rng(seed)
    rng_axes = [range(-degree, degree + 1)] * d
    grid = np.array(np.meshgrid(*rng_axes, indexing="ij")).reshape(d, -1).T
    # one representative per +-k pair
    keep = [tuple(k) >= tuple(-k) for k in grid]
    modes = grid[np.array(keep)]
    damp = 1.0 / (1.0 + np.sum(modes**2, axis=1))
    A = rng.standard_normal((d, len(modes))) * damp
    B = rng.standard_normal((d, len(modes))) * damp
    B[:, np.all(modes == 0, axis=1)] = 0.0
    q_coef = rng.uniform(0.5, 1.5, size=3)
    return TestField(int(seed), float(T), modes, A, B, q_coef)


# --- weak form ------------------------------------------------------------


def _integrands(u, du, phi, dphi, dphi_t, phi_t, hess, variant: str):
    """Pointwise integrands of the time-integrated terms."""
    mass = np.einsum("pi,pi->p", u, phi_t) + np.einsum("pik,pik->p", du, dphi_t)
    usq = np.einsum("pi,pi->p", u, u) + np.einsum("pik,pik->p", du, du)
    Ta = (np.einsum("pi,pj->pij", u, u)
          + np.einsum("pik,pjk->pij", du, du)
          - np.einsum("pli,plj->pij", du, du))
    flux = np.einsum("pij,pij->p", Ta, dphi) + 0.5 * usq * np.einsum("pii->p", dphi)
    if variant == "hessian":
        trans = np.einsum("pj,pik,pijk->p", u, du, hess)
    elif variant == "literal":
        trans = np.einsum("pj,pik,pkj->p", u, du, dphi)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return mass, flux, trans


def _cell_nodes(cells: int, offset: float = 0.0):
    """Two-point Gauss nodes/weights on ``cells`` equal cells of [0, 1)."""
    h = 1.0 / cells
    left = (np.arange(cells) + offset) * h
    nodes = (left[:, None] + 0.5 * h * (1.0 + GAUSS_NODES[None])).ravel()
    weights = np.tile(0.5 * h * GAUSS_WEIGHTS, cells)
    return nodes, weights


def _simpson(T: float, panels: int):
    if panels % 2:
        panels += 1
    t = np.linspace(0.0, T, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return t, w * (T / panels) / 3.0


@dataclass(frozen=True)
class WeakTerms:
    """The four integrals of the weak form; ``residual`` is their sum."""

    mass: float
    initial: float
    flux: float
    transport: float

    @property
    def residual(self) -> float:
        return self.mass + self.initial + self.flux + self.transport

    @property
    def scale(self) -> float:
        return abs(self.mass) + abs(self.initial) + abs(self.flux) + abs(self.transport)


def weak_terms(params: PeakonParams, field: TestField, T: float, cells_per_axis: int,
               variant: str = "hessian", offset: float = 0.0) -> WeakTerms:
    """Evaluate the four weak-form integrals for an exact peakon.

    Space is integrated in the moving coordinate ``s = a.x - C t`` so the
    kink ``s in Z`` lies on cell boundaries (two-point Gauss per cell, also
    across the transverse axes); time uses composite Simpson with
    ``cells_per_axis`` panels.  A nonzero ``offset`` (fraction of a cell)
    shifts every cell boundary, which moves the kink inside a cell.
    """
    if cells_per_axis < 4:
        raise ValueError("cells_per_axis must be >= 4")
    if params.sigma != 0:
        raise ValueError("the weak form is checked for the exact (sigma = 0) peakon")
    if not params.axis_aligned:
        raise ValueError("the moving-frame quadrature needs an axis-aligned direction")
    if field.d != params.d:
        raise ValueError("test field and peakon dimensions differ")
    d = params.d
    m = int(np.flatnonzero(params.z)[0])
    sign = float(np.sign(params.z[m]))
    nodes, weights = _cell_nodes(cells_per_axis, offset)

    # tensor nodes: axis m carries s, the others the transverse coordinates
    axes = [nodes] * d
    W = weights
    for _ in range(d - 1):
        W = np.multiply.outer(W, weights)
    W = W.ravel()
    S = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    s = S[:, m]
    prof = params.M * phi_eval(s)
    dprof = params.M * phi_prime(s)
    u = np.repeat(prof[:, None], d, axis=1)
    du = np.zeros((len(s), d, d))
    du[:, :, m] = (sign * dprof)[:, None]

    def points(t):
        X = S.copy()
        X[:, m] = sign * (s + params.C * t)
        return X

    times, tw = _simpson(T, cells_per_axis)
    mass = flux = trans = 0.0
    for t, wt in zip(times, tw):
        val, grad, hess = field.spatial(points(t))
        q, dq = field.q(t)
        a, b, c = _integrands(u, du, q * val, q * grad, dq * grad, dq * val, q * hess, variant)
        mass += wt * float(W @ a)
        flux += wt * float(W @ b)
        trans += wt * float(W @ c)
    val, grad, _ = field.spatial(points(0.0))
    q0, _ = field.q(0.0)
    init = float(W @ (np.einsum("pi,pi->p", u, q0 * val) + np.einsum("pik,pik->p", du, q0 * grad)))
    return WeakTerms(mass, init, flux, trans)


def weak_residual(params: PeakonParams, field: TestField, T: float, cells_per_axis: int,
                  variant: str = "hessian", offset: float = 0.0) -> float:
    """Signed weak-form residual at one quadrature resolution."""
    return weak_terms(params, field, T, cells_per_axis, variant, offset).residual


def richardson(values, ratio: float = 2.0, default_order: float = 4.0) -> tuple[float, float]:
    """Extrapolate a sequence computed at widths ``h, h/r, h/r^2, ...``.

    Returns ``(limit, observed_order)``; the order comes from the last three
    values and falls back to ``default_order`` when they are not monotone.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values")
    order = default_order
    if v.size >= 3:
        d1, d2 = v[-3] - v[-2], v[-2] - v[-1]
        if d2 != 0 and d1 / d2 > 1:
            order = math.log(d1 / d2) / math.log(ratio)
    limit = v[-1] - (v[-2] - v[-1]) / (ratio**order - 1.0)
    return float(limit), float(order)


@dataclass(frozen=True)
class WeakCheck:
    cells: tuple[int, ...]
    residuals: tuple[float, ...]
    extrapolated: float
    order: float
    scale: float

    @property
    def relative(self) -> float:
        return abs(self.extrapolated) / self.scale if self.scale > 0 else 0.0

    @property
    def decay_order(self) -> float:
        """``log2`` of the residual ratio over the finest pair."""
        a, b = abs(self.residuals[-2]), abs(self.residuals[-1])
        if a == 0 or b == 0:
            return math.inf
        return math.log2(a / b)


def check_weak_form(params: PeakonParams, field: TestField, T: float = 0.2,
                    cells=(8, 16, 32), variant: str = "hessian",
                    offset: float = 0.0) -> WeakCheck:
    """Residuals over a cell-doubling sequence plus their extrapolation."""
    terms = [weak_terms(params, field, T, c, variant, offset) for c in cells]
    res = tuple(x.residual for x in terms)
    limit, order = richardson(res)
    return WeakCheck(tuple(cells), res, limit, order, terms[-1].scale)
