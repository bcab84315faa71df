"""Periodic grids and Fourier-space operators on the torus.

Fields are plain numpy arrays whose trailing ``d`` axes match ``grid.shape``
(row-major, last axis fastest, axis order x1..xd).  A vector field carries
one extra leading axis of length ``d``.  Every operator here acts on the
trailing axes only, so scalar and vector fields go through the same code.

Transforms are real-to-complex (``rfftn``) over the trailing axes.  Physical
wavenumbers are ``2*pi*k/L``; the Nyquist mode is dropped from odd
derivatives so that derivatives of real fields stay real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEFAULT_POINT_CAP = 2**24


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``prod_i [0, L_i)``.

    Attributes:
        n: points per axis (each even and >= 8).
        L: period per axis.
        point_cap: upper bound on the total number of grid points.
    """

    n: tuple[int, ...]
    L: tuple[float, ...]
    point_cap: int = DEFAULT_POINT_CAP

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        L = np.atleast_1d(np.asarray(self.L, dtype=float))
        if L.size == 1 and len(n) > 1:
            L = np.repeat(L, len(n))
        L = tuple(float(v) for v in L)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", L)

        if not 1 <= len(n) <= 3:
            raise ValueError(f"grid dimension must be 1..3, got {len(n)}")
        if len(L) != len(n):
            raise ValueError(f"need one period per axis, got n={n}, L={L}")
        for v in n:
            if v < 8 or v % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {n}")
        for v in L:
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"periods must be positive, got {L}")
        if int(np.prod(n)) > self.point_cap:
            raise ValueError(
                f"{int(np.prod(n))} grid points exceed the cap of {self.point_cap}")

    @classmethod
    def uniform(cls, d: int, n: int, L: float = 1.0) -> Grid:
        return cls((n,) * d, (L,) * d)

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def axes(self) -> tuple[int, ...]:
        """Trailing-axis indices used by every transform."""
        return tuple(range(-self.d, 0))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.L, self.n))

    @property
    def h_min(self) -> float:
        return min(self.spacing)

    @property
    def volume(self) -> float:
        return float(np.prod(self.L))

    @property
    def cell_volume(self) -> float:
        return self.volume / self.size

    @cached_property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    def coords(self, axis: int) -> np.ndarray:
        """1D node coordinates along ``axis``."""
        return np.arange(self.n[axis]) * (self.L[axis] / self.n[axis])

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        """Broadcastable node coordinates, one array per axis."""
        out = []
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.n[i]
            out.append(self.coords(i).reshape(shape))
        return tuple(out)

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, ...]:
        """Integer mode indices per axis in rfftn layout, broadcastable."""
        out = []
        for i, n in enumerate(self.n):
            if i == self.d - 1:
                k = np.arange(n // 2 + 1)
            else:
                k = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
            shape = [1] * self.d
            shape[i] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Physical wavenumbers ``2*pi*k/L`` per axis, broadcastable."""
        return tuple(2 * np.pi * k / L for k, L in zip(self.mode_index, self.L))

    @cached_property
    def _deriv_wavenumbers(self) -> tuple[np.ndarray, ...]:
        out = []
        for i, (k, kappa) in enumerate(zip(self.mode_index, self.wavenumbers)):
            out.append(np.where(np.abs(k) == self.n[i] // 2, 0.0, kappa))
        return tuple(out)

    @cached_property
    def kappa_sq(self) -> np.ndarray:
        return sum(kap**2 for kap in self.wavenumbers)

    @cached_property
    def helmholtz_symbol(self) -> np.ndarray:
        return 1.0 + self.kappa_sq

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule (every ``|k_i| <= n_i/3``)."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for k, n in zip(self.mode_index, self.n):
            keep = keep & (3 * np.abs(k) <= n)
        return keep

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each rfftn mode in the full spectrum (1 or 2)."""
        k = self.mode_index[-1]
        w = np.where((k == 0) | (k == self.n[-1] // 2), 1.0, 2.0)
        return np.broadcast_to(w, self.spectral_shape)

    def deriv_symbol(self, axis: int) -> np.ndarray:
        return 1j * self._deriv_wavenumbers[axis]

    def directional_symbol(self, direction) -> np.ndarray:
        """Fourier symbol of ``sum_i e_i * d/dx_i`` for a real direction ``e``."""
        return 1j * sum(float(e) * kap for e, kap in zip(direction, self._deriv_wavenumbers))


def _check(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[f.ndim - grid.d:] != grid.shape:
        raise ValueError(f"field shape {f.shape} does not end with grid shape {grid.shape}")
    return f


def fft(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward rfftn over the trailing axes.

    Components that are constant on the grid get an exactly zero spectrum
    off the zero mode (non-power-of-two transforms leave roundoff there).
    """
    f = _check(f, grid)
    f_hat = np.fft.rfftn(f, axes=grid.axes)
    flat = f.reshape((-1, grid.size))
    const = flat.max(axis=1) == flat.min(axis=1)
    if const.any():
        view = f_hat.reshape((-1,) + grid.spectral_shape)
        zero = (slice(None),) + (0,) * grid.d
        keep = view[zero].copy()
        view[const] = 0.0
        view[zero] = keep
    return f_hat


def ifft(f_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfftn(f_hat, s=grid.shape, axes=grid.axes)


def grad(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Spectral derivative along ``axis``."""
    if not 0 <= axis < grid.d:
        raise ValueError(f"axis {axis} out of range for d={grid.d}")
    return ifft(grid.deriv_symbol(axis) * fft(f, grid), grid)


def helmholtz_apply(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply ``1 - Laplacian``."""
    return ifft(grid.helmholtz_symbol * fft(f, grid), grid)


def helmholtz_invert(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply ``(1 - Laplacian)^{-1}``."""
    return ifft(fft(f, grid) / grid.helmholtz_symbol, grid)


def dealias(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Zero every mode with some ``|k_i| > n_i/3``.

    Input that is already band-limited to roundoff is returned as an
    unchanged copy, which makes the operation exactly idempotent.
    """
    f_hat = fft(f, grid)
    scale = np.abs(f_hat).max(initial=0.0)
    dropped = np.abs(f_hat[..., ~grid.dealias_mask]).max(initial=0.0)
    if dropped <= 1e-13 * scale:
        return np.array(f, dtype=float, copy=True)
    return ifft(np.where(grid.dealias_mask, f_hat, 0.0), grid)


def lp_norm(f: np.ndarray, grid: Grid, p: float = 2.0) -> float:
    """Grid L^p norm (equal-weight quadrature, or the sample max for p=inf)."""
    f = _check(f, grid)
    if p == np.inf:
        return float(np.abs(f).max(initial=0.0))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((np.sum(np.abs(f) ** p) * grid.cell_volume) ** (1.0 / p))


def _eval_vectors(grid: Grid, points: np.ndarray) -> list[np.ndarray]:
    # exp(i kappa x) per axis in rfftn layout.  Nyquist columns become cos so the
    # interpolant is real and reproduces the samples at the nodes; the last axis
    # carries the conjugate-pair weight 2 on interior modes.
    vecs = []
    for i in range(grid.d):
        n, L = grid.n[i], grid.L[i]
        last = i == grid.d - 1
        k = np.arange(n // 2 + 1) if last else np.fft.fftfreq(n, 1.0 / n)
        phase = 2 * np.pi * np.outer(np.mod(points[:, i], L) / L, k)
        v = np.exp(1j * phase)
        ny = n // 2
        v[:, ny] = np.cos(phase[:, ny])
        if last:
            v[:, 1:ny] *= 2.0
        vecs.append(v)
    return vecs


def eval_hat(f_hat: np.ndarray, grid: Grid, points) -> np.ndarray:
    """Evaluate the trigonometric interpolant from rfftn coefficients.

    ``f_hat`` may carry leading axes (e.g. vector components); the result has
    shape ``leading + (npoints,)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != grid.d:
        raise ValueError(f"points must have {grid.d} coordinates")
    vecs = _eval_vectors(grid, pts)
    lead = f_hat.shape[: f_hat.ndim - grid.d]
    c = f_hat.reshape((-1,) + grid.spectral_shape)
    letters = "abc"[: grid.d]
    spec = "z" + letters + "," + ",".join(f"p{a}" for a in letters) + "->zp"
    out = np.einsum(spec, c, *vecs, optimize=True).real / grid.size
    return out.reshape(lead + (pts.shape[0],))


def eval_at(f: np.ndarray, grid: Grid, point) -> float | np.ndarray:
    """Evaluate the band-limited interpolant of ``f`` at off-grid points.

    Points are reduced modulo the periods.  A single point returns a float
    for a scalar field; arrays of points (shape ``(m, d)``) return one value
    per point.
    """
    single = np.ndim(point) == 1
    vals = eval_hat(fft(f, grid), grid, point)
    if single:
        vals = vals[..., 0]
        return float(vals) if vals.ndim == 0 else vals
    return vals
