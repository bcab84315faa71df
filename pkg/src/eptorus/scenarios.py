"""Initial data for the blow-up, norm-inflation and peakon experiments.

Each builder returns the velocity field together with something checkable:
a slope certificate for the blow-up families, a small report for the
inflation data, and the travelling-wave parameters for the peakon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import besov
from .besov import BesovParams
from .diagnostics import BlowupCertificate, DirectionSpec, energy_h, slope_hat
from .errors import MarginUnreachable
from .peakon import phi_eval
from .spectral import Grid, eval_hat, fft, ifft

COTH_HALF = math.cosh(0.5) / math.sinh(0.5)


# --- blow-up profiles -----------------------------------------------------


@dataclass(frozen=True)
class ProfileSpec:
    """``F(s) = -sum_{k<=K} a_k sin(2 pi k s)`` with ``a_k = A/k`` by default."""

    K: int
    amplitude: float = 1.0
    coefficients: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.coefficients is not None and len(self.coefficients) != self.K:
            raise ValueError("need exactly K coefficients")

    @property
    def a(self) -> np.ndarray:
        if self.coefficients is not None:
            return np.asarray(self.coefficients, dtype=float)
        return self.amplitude / np.arange(1, self.K + 1)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for k, ak in enumerate(self.a, start=1):
            out -= ak * np.sin(2 * np.pi * k * s)
        return out


def _lattice_phase(grid: Grid, z: tuple[int, ...]) -> np.ndarray:
    # z . x / L on an isotropic grid, as a full-shape array
    if len(set(grid.L)) != 1:
        raise ValueError("lattice profiles need the same period on every axis")
    s = sum(zi * xi for zi, xi in zip(z, grid.mesh)) / grid.L[0]
    return np.broadcast_to(s, grid.shape).copy()


def profile_field(grid: Grid, direction: DirectionSpec, profile: ProfileSpec,
                  transverse: Callable | None = None) -> np.ndarray:
    """``u0 = F(z.x/L) e`` plus an optional ``w(z.x/L) e_perp``."""
    if direction.d != grid.d:
        raise ValueError("direction and grid dimensions differ")
    s = _lattice_phase(grid, direction.z)
    F = profile(s)
    u = np.einsum("i,...->i...", direction.e, F)
    if transverse is not None and grid.d > 1:
        w = direction.orthogonal()[0].e
        u = u + np.einsum("i,...->i...", w, np.asarray(transverse(s), dtype=float))
    return u


def blowup_profile(grid: Grid, direction: DirectionSpec, target_margin: float,
                   K_max: int = 64, amplitude: float = 1.0,
                   transverse: Callable | None = None) -> tuple[ProfileSpec, BlowupCertificate]:
    """Smallest ``K`` whose profile certifies ``margin >= target_margin``.

    The search measures the margin of the sampled field exactly rather than
    trusting the ``sqrt(K)`` asymptotics.  Modes beyond the dealiased band of
    ``grid`` are not admissible.
    """
    if not target_margin > 1:
        raise ValueError(f"target margin must exceed 1, got {target_margin}")
    kz = max(abs(v) for v in direction.z)
    band = min(grid.n) // 3
    best = None
    for K in range(1, K_max + 1):
        if K * kz > band:
            break
        prof = ProfileSpec(K, amplitude)
        u = profile_field(grid, direction, prof, transverse)
        cert = BlowupCertificate.from_field(u, grid, direction)
        best = cert.margin
        if cert.margin >= target_margin:
            return prof, cert
    raise MarginUnreachable(
        f"no K <= {K_max} reaches margin {target_margin} on this grid"
        + (f" (best {best:.4f})" if best is not None else ""))


def build_blowup(grid: Grid, direction: DirectionSpec, target_margin: float,
                 K_max: int = 64, amplitude: float = 1.0,
                 transverse: Callable | None = None) -> tuple[np.ndarray, BlowupCertificate]:
    """Slope-steepening data ``F(z.x/L) e`` with its blow-up certificate at x0 = 0."""
    prof, cert = blowup_profile(grid, direction, target_margin, K_max, amplitude, transverse)
    return profile_field(grid, direction, prof, transverse), cert


def build_blowup_nd(grid: Grid, direction: DirectionSpec, target_margin: float,
                    K_max: int = 64, amplitude: float = 1.0) -> tuple[np.ndarray, BlowupCertificate]:
    """Same construction for ``d >= 3``; the first row of the frame is ``e``."""
    if grid.d < 3:
        raise ValueError("build_blowup_nd needs d >= 3")
    return build_blowup(grid, direction, target_margin, K_max, amplitude)


def hypothesis_text(cert: BlowupCertificate) -> str:
    """Human-readable form of the slope hypothesis behind a certificate."""
    z = cert.direction.z
    if sum(1 for v in z if v) == 1:
        i = next(k for k, v in enumerate(z) if v) + 1
        lhs = f"d_{i} u^{i}_0(0)"
    else:
        lhs = f"d_e (e.u_0)(0), e ~ {z}"
    rhs = -math.sqrt(2.0) * cert.E
    verdict = "holds" if cert.holds else "fails"
    return f"{lhs} = {cert.g0:.10g} < -sqrt(2)*||u0||_H1 = {rhs:.10g}: {verdict}"


# --- norm inflation -------------------------------------------------------


@dataclass(frozen=True)
class InflationSpec:
    """Small-data family ``(eps S_N W / ||W||, eps f, ..., eps f)``.

    ``N`` is the dyadic index of the low-frequency cutoff ``S_N`` (modes up
    to about ``1.6 * 2^N`` survive).  ``W`` is truncated at ``K_max``.
    """

    eps: float
    N: int
    d: int = 2
    p: float = 2.0
    r: float = 2.0
    K_max: int = 2**14
    f_profile: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.d <= self.p:
            raise ValueError(f"need p >= d, got p={self.p}, d={self.d}")
        if not self.r > 1:
            raise ValueError(f"need r > 1, got {self.r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.K_max < 2:
            raise ValueError("K_max must be >= 2")

    @property
    def s(self) -> float:
        return 1.0 + self.d / self.p

    @property
    def besov(self) -> BesovParams:
        return BesovParams(self.s, self.p, self.r)


def w_series(spec: InflationSpec) -> tuple[np.ndarray, np.ndarray]:
    """Modes ``k = 2..K_max`` and coefficients ``-k^-(1+d/p) (ln k)^(-2/(1+r))``."""
    k = np.arange(2, spec.K_max + 1)
    w = -(k.astype(float) ** -spec.s) * np.log(k) ** (-2.0 / (1.0 + spec.r))
    return k, w


def _line_grid(kmax: float) -> Grid:
    # 1D grid on [0, 2 pi) whose dealiased band holds every mode up to kmax
    n = 8
    while n // 3 < kmax:
        n *= 2
    return Grid((n,), (2 * np.pi,))


def _series_on(grid1: Grid, k: np.ndarray, coef: np.ndarray) -> np.ndarray:
    # sum_k coef_k sin(k x) via its rfft coefficients
    f_hat = np.zeros(grid1.spectral_shape, dtype=complex)
    f_hat[k] = -0.5j * coef * grid1.n[0]
    return ifft(f_hat, grid1)


def line_besov_norm(g: np.ndarray, grid1: Grid, params: BesovParams, d: int) -> float:
    """Besov norm on ``T^d`` of a function of ``x1`` sampled on ``grid1``.

    Each block norm picks up the transverse volume factor ``(2 pi)^((d-1)/p)``.
    """
    norms = besov.block_norms(g, grid1, params.p)
    if params.p != np.inf:
        norms = norms * (2 * np.pi) ** ((d - 1) / params.p)
    return besov.besov_from_blocks(norms, params.s, params.r)


def w_besov_norm(spec: InflationSpec) -> float:
    """``||W||`` in the critical Besov space, for the truncated series."""
    k, w = w_series(spec)
    g1 = _line_grid(spec.K_max)
    return line_besov_norm(_series_on(g1, k, w), g1, spec.besov, spec.d)


def cutoff_slope(spec: InflationSpec, N: int | None = None) -> float:
    """``d_1 S_N W (0) = sum_k eta(k / 2^N) k w_k``."""
    N = spec.N if N is None else N
    k, w = w_series(spec)
    return float(np.sum(besov.eta(k / 2.0**N) * k * w))


def default_f(spec: InflationSpec, x1: np.ndarray) -> np.ndarray:
    """``sin(x1)`` scaled to Besov norm ``1 - 1e-12``."""
    g1 = _line_grid(4)
    nrm = line_besov_norm(np.sin(g1.coords(0)), g1, spec.besov, spec.d)
    return (1.0 - 1e-12) * np.sin(x1) / nrm


@dataclass
class InflationReport:
    slope0: float
    h1_norm: float
    besov_norm: float
    w_norm: float
    certificate: BlowupCertificate
    hypothesis_unmet: bool


def build_inflation(grid: Grid, spec: InflationSpec) -> tuple[np.ndarray, InflationReport]:
    """Small critical-norm data whose slope at the origin is large.

    The certificate is always filled; ``hypothesis_unmet`` flags data whose
    margin does not exceed 1 (the field is returned regardless).
    """
    if grid.d != spec.d:
        raise ValueError("grid and spec dimensions differ")
    if not math.isclose(grid.L[0], 2 * np.pi, rel_tol=1e-14):
        raise ValueError("inflation data needs period 2*pi along x1")
    kmax_kept = besov.ETA_SUPPORT * 2.0**spec.N
    if min(kmax_kept, spec.K_max) > grid.n[0] // 3:
        raise ValueError(f"grid too coarse along x1 for N={spec.N}")
    k, w = w_series(spec)
    coef = besov.eta(k / 2.0**spec.N) * w
    keep = coef != 0
    k, coef = k[keep], coef[keep]
    w_norm = w_besov_norm(spec)

    x1 = np.broadcast_to(grid.mesh[0], grid.shape)
    g1 = Grid((grid.n[0],), (grid.L[0],))
    first = spec.eps * _series_on(g1, k, coef) / w_norm
    f = spec.f_profile or (lambda x: default_f(spec, x))
    rest = spec.eps * np.asarray(f(x1), dtype=float)
    u = np.empty((grid.d,) + grid.shape)
    u[0] = np.broadcast_to(first.reshape((-1,) + (1,) * (grid.d - 1)), grid.shape)
    for i in range(1, grid.d):
        u[i] = rest

    direction = DirectionSpec((1,) + (0,) * (grid.d - 1))
    cert = BlowupCertificate.from_field(u, grid, direction)
    report = InflationReport(
        slope0=cert.g0,
        h1_norm=cert.E,
        besov_norm=besov.besov_norm(u, grid, spec.besov),
        w_norm=w_norm,
        certificate=cert,
        hypothesis_unmet=not cert.holds,
    )
    return u, report


# --- peakons --------------------------------------------------------------


@dataclass(frozen=True)
class PeakonParams:
    """Travelling peak ``u^i = M Phi(a.x - C t)`` on the unit torus.

    ``C = coth(1/2) M sum(a)`` is set by the constructor unless ``speed``
    overrides it (used to build deliberately wrong controls).
    """

    M: float
    z: tuple[int, ...]
    sigma: float = 0.0
    speed: float | None = None
    a: np.ndarray = field(init=False, repr=False, compare=False)
    C: float = field(init=False)

    def __post_init__(self):
        z = tuple(int(v) for v in self.z)
        if not any(z):
            raise ValueError("peakon direction must be nonzero")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        object.__setattr__(self, "z", z)
        a = np.asarray(z, dtype=float) / math.sqrt(sum(v * v for v in z))
        object.__setattr__(self, "a", a)
        C = COTH_HALF * self.M * float(np.sum(a)) if self.speed is None else float(self.speed)
        object.__setattr__(self, "C", C)

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def exact_speed(self) -> float:
        return COTH_HALF * self.M * float(np.sum(self.a))

    @property
    def axis_aligned(self) -> bool:
        return sum(1 for v in self.z if v) == 1

    def with_speed(self, C: float) -> PeakonParams:
        return PeakonParams(self.M, self.z, self.sigma, C)


def build_peakon(grid: Grid, M: float, z, sigma: float = 0.0) -> tuple[np.ndarray, PeakonParams]:
    """Sample the peakon at ``t = 0``; ``sigma > 0`` smooths the kink spectrally."""
    if any(not math.isclose(L, 1.0) for L in grid.L):
        raise ValueError("peakon data lives on the unit torus")
    params = PeakonParams(M, tuple(z), sigma)
    y = sum(a * x for a, x in zip(params.a, grid.mesh))
    prof = M * phi_eval(np.broadcast_to(y, grid.shape))
    if sigma > 0:
        mult = np.exp(-0.5 * sigma**2 * grid.kappa_sq)
        prof = ifft(mult * fft(prof, grid), grid)
    u = np.empty((grid.d,) + grid.shape)
    u[:] = prof
    return u, params
