"""Euler-Poincare dynamics on the torus.

The prognostic variable is the momentum ``m = (1 - Laplacian) u``, advanced
by classical RK4 in Fourier space.  Two right-hand sides are available and
agree to roundoff on dealiased data:

* convective: ``-(u . grad m + (grad u)^T m + m div u)``
* flux: ``-div T`` with
  ``T_ij = m_i u_j + delta_ij (|u|^2 + |grad u|^2)/2 - d_i u . d_j u``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from . import besov
from .diagnostics import (
    CharacteristicTracer,
    DirectionSpec,
    energy_hat,
    orthogonal_residual,
    tail_fraction_hat,
    velocity_gradient_hat,
)
from .errors import NanDetected
from .spectral import Grid, fft, ifft


class RhsForm(str, enum.Enum):
    CONVECTIVE = "convective"
    FLUX = "flux"


class Outcome(str, enum.Enum):
    COMPLETED = "completed"
    BLOWUP_DETECTED = "blowup_detected"
    NUMERICAL_FAILURE = "numerical_failure"


class Reason(str, enum.Enum):
    GRAD_THRESHOLD = "grad_threshold"
    DT_FLOOR = "dt_floor"
    SPECTRAL_TAIL = "spectral_tail"
    NAN = "nan"


@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    t_end: float
    cfl: float = 0.25
    dt_min: float = 1e-8
    dt_max: float = math.inf
    dealias: bool = True
    detect_grad_factor: float = 50.0
    detect_tail_frac: float = 0.1
    rhs_form: RhsForm = RhsForm.CONVECTIVE

    def __post_init__(self):
        object.__setattr__(self, "rhs_form", RhsForm(self.rhs_form))
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.detect_grad_factor > 1:
            raise ValueError("detect_grad_factor must exceed 1")
        if not 0 < self.detect_tail_frac < 1:
            raise ValueError("detect_tail_frac must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SimState:
    """Time and momentum; velocity and Fourier coefficients are derived lazily."""

    grid: Grid
    t: float
    m: np.ndarray
    _m_hat: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_velocity(cls, u: np.ndarray, grid: Grid, t: float = 0.0) -> SimState:
        u = np.asarray(u, dtype=float)
        if u.shape != (grid.d,) + grid.shape:
            raise ValueError(f"velocity must have shape {(grid.d,) + grid.shape}, got {u.shape}")
        return cls(grid, float(t), velocity_to_momentum(u, grid))

    @cached_property
    def m_hat(self) -> np.ndarray:
        if self._m_hat is not None:
            return self._m_hat
        return fft(self.m, self.grid)

    @cached_property
    def u_hat(self) -> np.ndarray:
        return self.m_hat / self.grid.helmholtz_symbol

    @cached_property
    def u(self) -> np.ndarray:
        return ifft(self.u_hat, self.grid)


def velocity_to_momentum(u: np.ndarray, grid: Grid) -> np.ndarray:
    return ifft(grid.helmholtz_symbol * fft(u, grid), grid)


def velocity_of(m: np.ndarray, grid: Grid) -> np.ndarray:
    """Componentwise ``(1 - Laplacian)^{-1} m``."""
    return ifft(fft(m, grid) / grid.helmholtz_symbol, grid)


# --- right-hand sides -----------------------------------------------------


def _rhs_hat(u_hat, m_hat, grid: Grid, form: RhsForm, dealias: bool) -> np.ndarray:
    d = grid.d
    if dealias:
        mask = grid.dealias_mask
        u_hat = u_hat * mask
        m_hat = m_hat * mask
    u = ifft(u_hat, grid)
    m = ifft(m_hat, grid)
    du = velocity_gradient_hat(u_hat, grid)  # du[i, j] = d_j u^i
    if form is RhsForm.CONVECTIVE:
        dm = velocity_gradient_hat(m_hat, grid)
        div = np.trace(du, axis1=0, axis2=1)
        adv = np.einsum("j...,ij...->i...", u, dm)
        stretch = np.einsum("j...,ji...->i...", m, du)
        out = -fft(adv + stretch + m * div, grid)
    else:
        iso = 0.5 * (np.sum(u * u, axis=0) + np.sum(du * du, axis=(0, 1)))
        T = np.einsum("i...,j...->ij...", m, u) - np.einsum("li...,lj...->ij...", du, du)
        for i in range(d):
            T[i, i] += iso
        T_hat = fft(T, grid)
        out = -sum(grid.deriv_symbol(j) * T_hat[:, j] for j in range(d))
    if dealias:
        out = out * grid.dealias_mask
    return out


def _rhs_physical(u, m, grid: Grid, form: RhsForm, dealias: bool) -> np.ndarray:
    return ifft(_rhs_hat(fft(u, grid), fft(m, grid), grid, RhsForm(form), dealias), grid)


def rhs_convective(u: np.ndarray, m: np.ndarray, grid: Grid, dealias: bool = True) -> np.ndarray:
    """``dm/dt`` from the convective form of the momentum equation."""
    return _rhs_physical(u, m, grid, RhsForm.CONVECTIVE, dealias)


def rhs_flux(u: np.ndarray, m: np.ndarray, grid: Grid, dealias: bool = True) -> np.ndarray:
    """``dm/dt = -div T`` from the stress-tensor form."""
    return _rhs_physical(u, m, grid, RhsForm.FLUX, dealias)


# --- time stepping --------------------------------------------------------


@dataclass(frozen=True)
class StepInfo:
    """What observers see about an accepted step."""

    index: int
    dt: float
    stage_velocity_hats: tuple[np.ndarray, ...]


def _rk4(state: SimState, dt: float, cfg: SimConfig):
    with np.errstate(invalid="ignore", over="ignore"):
        return _rk4_stages(state, dt, cfg)


def _rk4_stages(state: SimState, dt: float, cfg: SimConfig):
    grid = cfg.grid
    sym = grid.helmholtz_symbol
    m0 = state.m_hat
    stages = []

    def f(m_hat):
        u_hat = m_hat / sym
        r = _rhs_hat(u_hat, m_hat, grid, cfg.rhs_form, cfg.dealias)
        if not np.all(np.isfinite(r)):
            raise NanDetected(f"non-finite right-hand side near t={state.t:.6g}")
        stages.append(u_hat)
        return r

    k1 = f(m0)
    k2 = f(m0 + 0.5 * dt * k1)
    k3 = f(m0 + 0.5 * dt * k2)
    k4 = f(m0 + dt * k3)
    m_new = m0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(m_new)):
        raise NanDetected(f"non-finite momentum near t={state.t:.6g}")
    return m_new, tuple(stages)


def _advance(state: SimState, dt: float, cfg: SimConfig, t_new: float | None = None):
    m_hat, stages = _rk4(state, dt, cfg)
    t = state.t + dt if t_new is None else t_new
    new = SimState(cfg.grid, t, ifft(m_hat, cfg.grid), m_hat)
    return new, stages


def step(state: SimState, dt: float, cfg: SimConfig) -> SimState:
    """One classical RK4 step of size ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return _advance(state, dt, cfg)[0]


# --- integration ----------------------------------------------------------


@dataclass(frozen=True)
class SeriesRow:
    t: float
    dt: float
    H: float
    grad_linf: float
    besov_1_inf_inf: float
    dir_residual: float
    g_char: float
    tail_frac: float
    cum_grad_integral: float


SERIES_COLUMNS = tuple(SeriesRow.__dataclass_fields__)


@dataclass
class RunReport:
    outcome: Outcome
    t_final: float
    reason: Reason | None
    series: list[SeriesRow]
    cumulative_grad_integral: float
    final_state: SimState = field(repr=False)
    steps: int = 0
    message: str = ""

    @property
    def t_detect(self) -> float | None:
        return self.t_final if self.outcome is Outcome.BLOWUP_DETECTED else None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.series])


class SnapshotCollector:
    """Observer keeping ``(t, u)`` at every accepted step (optionally every k-th)."""

    def __init__(self, every: int = 1):
        self.every = max(1, int(every))
        self.snapshots: list[tuple[float, np.ndarray]] = []
        self.states: list[SimState] = []
        self._count = 0

    def __call__(self, state: SimState, info: StepInfo | None = None):
        if self._count % self.every == 0:
            self.snapshots.append((state.t, state.u.copy()))
            self.states.append(state)
        self._count += 1


def _grad_linf_hat(u_hat, grid):
    return float(np.abs(velocity_gradient_hat(u_hat, grid)).max(initial=0.0))


def _besov_1_inf_inf(u_hat, grid):
    norms = besov.block_norms_hat(u_hat, grid, np.inf, vector=True)
    return besov.besov_from_blocks(norms, 1.0, np.inf)


def integrate(u0, cfg: SimConfig, observers: Iterable[Callable] = (), *,
              direction: DirectionSpec | None = None, x0=None) -> RunReport:
    """Integrate from ``u0`` (a velocity array or a ``SimState``) to ``cfg.t_end``.

    Steps use ``dt = clamp(cfl * h_min / max(|u|_inf, 1), dt_min, dt_max)``,
    shortened to land on ``t_end``.  The run halts as ``blowup_detected`` when
    the velocity gradient exceeds ``detect_grad_factor * max(1, initial)``,
    when the CFL step falls to ``dt_min``, or when the spectral tail holds
    more than ``detect_tail_frac`` of the energy.  ``direction`` enables the
    invariance residual column and sets the slope direction of the
    characteristic traced from ``x0`` (when given).  Observers are called as
    ``obs(state, info)`` on the initial state (``info=None``) and after every
    accepted step.
    """
    grid = cfg.grid
    state = u0 if isinstance(u0, SimState) else SimState.from_velocity(u0, grid)
    observers = list(observers)
    tracer = None
    if x0 is not None:
        tracer = CharacteristicTracer(grid, x0, direction)
        observers.insert(0, tracer)

    series: list[SeriesRow] = []
    cum = 0.0
    prev_grad = None

    def record(st: SimState, dt: float) -> tuple[float, float]:
        nonlocal cum, prev_grad
        gl = _grad_linf_hat(st.u_hat, grid)
        if prev_grad is not None:
            cum += 0.5 * dt * (gl + prev_grad)
        prev_grad = gl
        tail = tail_fraction_hat(st.u_hat, grid, cfg.dealias)
        res = orthogonal_residual(st.u, grid, direction) if direction is not None else math.nan
        series.append(SeriesRow(
            t=st.t, dt=dt, H=energy_hat(st.u_hat, grid), grad_linf=gl,
            besov_1_inf_inf=_besov_1_inf_inf(st.u_hat, grid), dir_residual=res,
            g_char=tracer.last_g if tracer is not None else math.nan,
            tail_frac=tail, cum_grad_integral=cum))
        return gl, tail

    def finish(outcome, reason, message=""):
        return RunReport(Outcome(outcome), state.t, None if reason is None else Reason(reason),
                         series, cum, state, n, message)

    n = 0
    if not np.all(np.isfinite(state.m)):
        return finish(Outcome.NUMERICAL_FAILURE, Reason.NAN, "non-finite initial data")
    for obs in observers:
        obs(state, None)
    grad0, _ = record(state, 0.0)
    threshold = cfg.detect_grad_factor * max(1.0, grad0)

    while state.t < cfg.t_end:
        umax = float(np.abs(state.u).max(initial=0.0))
        dt_cfl = cfg.cfl * grid.h_min / max(umax, 1.0)
        if dt_cfl <= cfg.dt_min:
            return finish(Outcome.BLOWUP_DETECTED, Reason.DT_FLOOR,
                          f"CFL step {dt_cfl:.3e} at the floor")
        dt = min(dt_cfl, cfg.dt_max)
        last = state.t + dt >= cfg.t_end
        if last:
            dt = cfg.t_end - state.t
        try:
            new, stages = _advance(state, dt, cfg, cfg.t_end if last else None)
        except NanDetected as exc:
            return finish(Outcome.NUMERICAL_FAILURE, Reason.NAN, str(exc))
        n += 1
        info = StepInfo(n, dt, stages)
        state = new
        for obs in observers:
            obs(state, info)
        gl, tail = record(state, dt)
        if not (math.isfinite(gl) and math.isfinite(series[-1].H)):
            return finish(Outcome.NUMERICAL_FAILURE, Reason.NAN, "non-finite diagnostics")
        if gl > threshold:
            return finish(Outcome.BLOWUP_DETECTED, Reason.GRAD_THRESHOLD,
                          f"gradient {gl:.4g} above {threshold:.4g}")
        if tail > cfg.detect_tail_frac:
            return finish(Outcome.BLOWUP_DETECTED, Reason.SPECTRAL_TAIL,
                          f"tail fraction {tail:.3g}")
    return finish(Outcome.COMPLETED, None)
