"""Run diagnostics: energy, gradient norms, invariance residuals, slope bounds.

Vector fields have shape ``(d,) + grid.shape``.  ``du[i, j]`` below always
means ``d u^i / d x_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidHypothesis, NotInvariant
from .spectral import Grid, eval_hat, fft, ifft, lp_norm

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DirectionSpec:
    """Integer lattice direction ``z`` (gcd-reduced) and its unit vector."""

    z: tuple[int, ...]

    def __post_init__(self):
        z = tuple(int(v) for v in self.z)
        if not any(z):
            raise ValueError("direction must be a nonzero integer vector")
        g = math.gcd(*z)
        object.__setattr__(self, "z", tuple(v // g for v in z))

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def e(self) -> np.ndarray:
        z = np.asarray(self.z, dtype=float)
        return z / np.linalg.norm(z)

    def orthogonal(self) -> list[DirectionSpec]:
        """Integer directions spanning the orthogonal complement of ``z``."""
        z = np.asarray(self.z)
        if self.d == 1:
            return []
        if self.d == 2:
            return [DirectionSpec((-z[1], z[0]))]
        # d == 3: one integer vector orthogonal to z, then the cross product
        for cand in np.eye(3, dtype=int):
            w = np.cross(z, cand)
            if np.any(w):
                break
        return [DirectionSpec(tuple(w)), DirectionSpec(tuple(np.cross(z, w)))]


def as_direction(direction) -> np.ndarray:
    if isinstance(direction, DirectionSpec):
        return direction.e
    e = np.asarray(direction, dtype=float)
    return e / np.linalg.norm(e)


def velocity_gradient_hat(u_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Stack of ``du[i, j]`` in physical space from velocity coefficients."""
    d = grid.d
    sym = np.stack([grid.deriv_symbol(j) * np.ones(grid.spectral_shape) for j in range(d)])
    return ifft(u_hat[:, None] * sym[None], grid)


def energy_hat(u_hat: np.ndarray, grid: Grid) -> float:
    dens = grid.rfft_weights * grid.helmholtz_symbol * np.abs(u_hat) ** 2
    return float(dens.sum() * grid.volume / grid.size**2)


def energy_h(u: np.ndarray, grid: Grid) -> float:
    """Conserved energy ``int |u|^2 + |grad u|^2 dx`` (the squared H^1 norm)."""
    return energy_hat(fft(u, grid), grid)


def h1_norm(u: np.ndarray, grid: Grid) -> float:
    return math.sqrt(energy_h(u, grid))


def grad_linf(u: np.ndarray, grid: Grid) -> float:
    """Max over the grid and over (i, j) of ``|d u^i / d x_j|``."""
    return float(np.abs(velocity_gradient_hat(fft(u, grid), grid)).max(initial=0.0))


def sym_grad_linf(u: np.ndarray, grid: Grid) -> float:
    """Max entry of the symmetric part of the velocity gradient (reported only)."""
    du = velocity_gradient_hat(fft(u, grid), grid)
    return float(np.abs(0.5 * (du + du.swapaxes(0, 1))).max(initial=0.0))


def tail_fraction_hat(u_hat: np.ndarray, grid: Grid, dealiased: bool = True) -> float:
    """Share of the H^1 energy in the top third of the resolved band.

    The resolved band ends at ``n_i/3`` when the run is dealiased and at the
    Nyquist index otherwise; a mode is in the tail when some ``|k_i|`` lies
    above two thirds of that cutoff.
    """
    dens = grid.rfft_weights * grid.helmholtz_symbol * np.abs(u_hat) ** 2
    dens = dens.reshape((-1,) + grid.spectral_shape).sum(axis=0)
    total = dens.sum()
    if total == 0:
        return 0.0
    tail = np.zeros(grid.spectral_shape, dtype=bool)
    for k, n in zip(grid.mode_index, grid.n):
        cut = n / 3.0 if dealiased else n / 2.0
        tail = tail | (np.abs(k) > (2.0 / 3.0) * cut)
    return float(dens[tail].sum() / total)


def spectral_tail_fraction(u: np.ndarray, grid: Grid, dealiased: bool = True) -> float:
    return tail_fraction_hat(fft(u, grid), grid, dealiased)


def directional_residual(u: np.ndarray, grid: Grid, direction) -> float:
    """``max_i || d u^i / d n ||_{L^2}`` with ``n`` the unit direction."""
    e = as_direction(direction)
    du_n = ifft(grid.directional_symbol(e) * fft(u, grid), grid)
    return max(lp_norm(c, grid, 2) for c in du_n)


def orthogonal_residual(u: np.ndarray, grid: Grid, direction: DirectionSpec) -> float:
    """Largest directional residual over the complement of ``direction``."""
    dirs = direction.orthogonal()
    if not dirs:
        return 0.0
    return max(directional_residual(u, grid, w) for w in dirs)


def slope_hat(u_hat: np.ndarray, grid: Grid, e: np.ndarray) -> np.ndarray:
    """Coefficients of ``d_e (e . u)``."""
    return grid.directional_symbol(e) * np.tensordot(e, u_hat, axes=(0, 0))


# --- slope comparison ----------------------------------------------------


@dataclass(frozen=True)
class RiccatiBound:
    """Closed-form solution of ``G' = -G^2/2 + E^2``, ``G(0) = g0``."""

    g0: float
    E: float
    T_bound: float

    def G(self, t):
        t = np.asarray(t, dtype=float)
        a = SQRT2 * self.E
        rho = (self.g0 + a) / (self.g0 - a)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = a + 2.0 * a / (rho * np.exp(a * t) - 1.0)
        val = np.where(t == 0, self.g0, val)
        val = np.where(t >= self.T_bound, -np.inf, val)
        return float(val) if val.ndim == 0 else val

    __call__ = G


def riccati_bound(g0: float, E: float) -> RiccatiBound:
    """Blow-up time bound for a slope obeying ``g' <= -g^2/2 + E^2``.

    Requires ``E > 0`` and ``g0 < -sqrt(2) E``; then
    ``T_bound = ln((g0 - sqrt2 E)/(g0 + sqrt2 E)) / (sqrt2 E)``.
    """
    if not E > 0:
        raise InvalidHypothesis(f"energy norm must be positive, got E={E}")
    a = SQRT2 * E
    if not g0 < -a:
        raise InvalidHypothesis(f"need g0 < -sqrt(2) E = {-a:.6g}, got g0={g0:.6g}")
    T = (SQRT2 / (2.0 * E)) * math.log((g0 - a) / (g0 + a))
    return RiccatiBound(float(g0), float(E), T)


@dataclass(frozen=True)
class BlowupCertificate:
    g0: float
    E: float
    T_bound: float
    margin: float
    x0: tuple[float, ...]
    direction: DirectionSpec

    @classmethod
    def from_field(cls, u: np.ndarray, grid: Grid, direction: DirectionSpec,
                   x0=None) -> BlowupCertificate:
        x0 = tuple(float(v) for v in (x0 if x0 is not None else np.zeros(grid.d)))
        u_hat = fft(u, grid)
        g0 = float(eval_hat(slope_hat(u_hat, grid, direction.e), grid, [x0])[0])
        E = math.sqrt(energy_hat(u_hat, grid))
        margin = -g0 / (SQRT2 * E) if E > 0 else 0.0
        T = riccati_bound(g0, E).T_bound if margin > 1 else math.inf
        return cls(g0, E, T, margin, x0, direction)

    @property
    def holds(self) -> bool:
        return self.margin > 1

    def bound(self) -> RiccatiBound:
        return riccati_bound(self.g0, self.E)

    def to_dict(self) -> dict:
        return {
            "g0": self.g0,
            "E": self.E,
            "T_bound": self.T_bound if math.isfinite(self.T_bound) else None,
            "margin": self.margin,
            "x0": list(self.x0),
            "direction": list(self.direction.z),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> BlowupCertificate:
        T = doc["T_bound"]
        return cls(float(doc["g0"]), float(doc["E"]), math.inf if T is None else float(T),
                   float(doc["margin"]), tuple(float(v) for v in doc["x0"]),
                   DirectionSpec(tuple(doc["direction"])))


# --- characteristics -----------------------------------------------------


@dataclass
class CharTrace:
    x0: np.ndarray
    times: np.ndarray
    positions: np.ndarray
    g_values: np.ndarray


class CharacteristicTracer:
    """Observer that advances ``dX/dt = u(t, X)`` alongside the solver.

    It reuses the stage velocities of each accepted RK4 step, so the particle
    and the field form one coupled RK4 system.  ``g`` is the slope
    ``d_e (e . u)`` sampled at the particle.
    """

    def __init__(self, grid: Grid, x0, direction=None):
        self.grid = grid
        self.x = np.mod(np.asarray(x0, dtype=float), grid.L)
        self.e = as_direction(direction) if direction is not None else np.eye(grid.d)[0]
        self._t: list[float] = []
        self._x: list[np.ndarray] = []
        self._g: list[float] = []
        self.x0 = self.x.copy()

    def _velocity(self, u_hat, x):
        return eval_hat(u_hat, self.grid, [x])[:, 0]

    def __call__(self, state, info=None):
        if info is not None:
            dt = info.dt
            U = info.stage_velocity_hats
            x = self.x
            k1 = self._velocity(U[0], x)
            k2 = self._velocity(U[1], x + 0.5 * dt * k1)
            k3 = self._velocity(U[2], x + 0.5 * dt * k2)
            k4 = self._velocity(U[3], x + dt * k3)
            self.x = np.mod(x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), self.grid.L)
        g = float(eval_hat(slope_hat(state.u_hat, self.grid, self.e), self.grid, [self.x])[0])
        self._t.append(state.t)
        self._x.append(self.x.copy())
        self._g.append(g)

    @property
    def last_g(self) -> float:
        return self._g[-1] if self._g else math.nan

    @property
    def trace(self) -> CharTrace:
        return CharTrace(self.x0.copy(), np.asarray(self._t), np.asarray(self._x),
                         np.asarray(self._g))


def characteristic_trace(u0, cfg, x0, direction=None, observers: Sequence = ()):
    """Run ``integrate`` with a tracer from ``x0``; returns ``(CharTrace, RunReport)``."""
    from .dynamics import integrate

    tracer = CharacteristicTracer(cfg.grid, x0, direction)
    report = integrate(u0, cfg, [tracer, *observers])
    return tracer.trace, report


# --- reduced one-dimensional equation -------------------------------------


def fd_weights(times: np.ndarray, t0: float) -> np.ndarray:
    """Weights of the first-derivative finite difference at ``t0``."""
    # Lagrange basis derivative; small stencils only
    times = np.asarray(times, dtype=float)
    w = np.zeros(times.size)
    for i, ti in enumerate(times):
        others = np.delete(times, i)
        denom = np.prod(ti - others)
        total = 0.0
        for j in range(others.size):
            total += np.prod(np.delete(t0 - others, j))
        w[i] = total / denom
    return w


def reduced_rhs(u: np.ndarray, grid: Grid, e: np.ndarray, dealias: bool = True):
    """Transport term and right side of the reduced equation along ``e``.

    Returns ``(transport, rhs)`` with ``transport = v d_e v`` and
    ``rhs = -d_e (1 - d_e^2)^{-1} [v^2/2 + |u|^2/2 - |d_e u|^2/2 + (d_e v)^2]``
    where ``v = e . u``.
    """
    mask = grid.dealias_mask if dealias else True
    sym = grid.directional_symbol(e)
    u_hat = fft(u, grid)
    v_hat = np.tensordot(e, u_hat, axes=(0, 0))
    v = ifft(v_hat, grid)
    dv = ifft(sym * v_hat, grid)
    du = ifft(sym * u_hat, grid)
    transport = ifft(mask * fft(v * dv, grid), grid)
    bracket = 0.5 * v**2 + 0.5 * np.sum(u**2, axis=0) - 0.5 * np.sum(du**2, axis=0) + dv**2
    kap_e = sum(float(c) * kap for c, kap in zip(e, grid.wavenumbers))
    rhs = ifft(-sym / (1.0 + kap_e**2) * mask * fft(bracket, grid), grid)
    return transport, rhs


@dataclass
class ReducedResidual:
    times: np.ndarray
    residuals: np.ndarray
    scales: np.ndarray = field(repr=False)


def reduced_residual(snapshots: Sequence[tuple[float, np.ndarray]], grid: Grid,
                     direction: DirectionSpec, stencil: int = 5,
                     dealias: bool = True) -> ReducedResidual:
    """Relative L^2 residual of the reduced 1D equation along a run.

    ``snapshots`` is a sequence of ``(t, u)``.  The time derivative of
    ``e . u`` is a centred finite difference over ``stencil`` consecutive
    snapshots (3 or 5 points, any spacing).  Residuals are scaled by the sum
    of the L^2 norms of the three terms.
    """
    if stencil not in (3, 5):
        raise ValueError("stencil must be 3 or 5")
    e = direction.e
    for t, u in snapshots:
        res = orthogonal_residual(u, grid, direction)
        h1 = math.sqrt(energy_h(u, grid))
        if res > 1e-8 * max(h1, 1e-300) and res > 0:
            raise NotInvariant(f"snapshot at t={t} varies across {direction.z}: {res:.3e}")
    half = stencil // 2
    times = np.array([t for t, _ in snapshots])
    out_t, out_r, out_s = [], [], []
    for k in range(half, len(snapshots) - half):
        idx = range(k - half, k + half + 1)
        w = fd_weights(times[list(idx)], times[k])
        # weights sum to zero; differencing against the centre keeps constants exact
        vk = np.tensordot(e, snapshots[k][1], axes=(0, 0))
        dvdt = sum(wi * (np.tensordot(e, snapshots[i][1], axes=(0, 0)) - vk)
                   for wi, i in zip(w, idx))
        transport, rhs = reduced_rhs(snapshots[k][1], grid, e, dealias)
        terms = [lp_norm(x, grid, 2) for x in (dvdt, transport, rhs)]
        scale = sum(terms)
        err = lp_norm(dvdt + transport - rhs, grid, 2)
        out_t.append(times[k])
        out_r.append(err / scale if scale > 0 else 0.0)
        out_s.append(scale)
    return ReducedResidual(np.asarray(out_t), np.asarray(out_r), np.asarray(out_s))
