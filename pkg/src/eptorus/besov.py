"""Littlewood-Paley blocks and inhomogeneous Besov norms on the torus.

Frequencies are integer mode indices ``k`` (the lattice Z^d) whatever the
grid period.  The low-pass profile ``eta`` equals 1 on ``|k| <= 5/4`` and
vanishes for ``|k| >= 8/5``; the dyadic profile is
``phi(xi) = eta(xi/2) - eta(xi)`` so that ``eta + sum_j phi(2^-j .) = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import Grid, fft, ifft, lp_norm

ETA_PLATEAU = 5.0 / 4.0
ETA_SUPPORT = 8.0 / 5.0


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def eta(xi) -> np.ndarray:
    """Smooth radial cutoff: 1 on [0, 5/4], 0 beyond 8/5, C-infinity between."""
    r = np.abs(np.asarray(xi, dtype=float))
    t = (r - ETA_PLATEAU) / (ETA_SUPPORT - ETA_PLATEAU)
    t = np.clip(t, 0.0, 1.0)
    a, b = _psi(1.0 - t), _psi(t)
    return a / (a + b)


def phi(xi) -> np.ndarray:
    """Dyadic annulus profile, supported in 5/4 <= |xi| <= 16/5."""
    xi = np.asarray(xi, dtype=float)
    return eta(xi / 2.0) - eta(xi)


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    r: float = 2.0

    def __post_init__(self):
        if not (1 <= self.p <= np.inf):
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if not (1 <= self.r <= np.inf):
            raise ValueError(f"r must lie in [1, inf], got {self.r}")


@lru_cache(maxsize=16)
def _mode_radius(grid: Grid) -> np.ndarray:
    return np.sqrt(sum(k.astype(float) ** 2 for k in grid.mode_index))


def max_block(grid: Grid) -> int:
    """Largest j whose block can hold a resolved mode on ``grid``."""
    kmax = float(_mode_radius(grid).max())
    j = -1
    while ETA_PLATEAU * 2.0 ** (j + 1) < kmax:
        j += 1
    return j


def block_multiplier(grid: Grid, j: int) -> np.ndarray:
    if j < -1:
        raise ValueError(f"block index must be >= -1, got {j}")
    rad = _mode_radius(grid)
    if j == -1:
        return eta(rad)
    return phi(rad / 2.0**j)


def dyadic_block(f: np.ndarray, grid: Grid, j: int) -> np.ndarray:
    """Littlewood-Paley piece Delta_j f (j = -1 is the low-pass part)."""
    mult = block_multiplier(grid, j)
    if j > max_block(grid):
        return np.zeros_like(np.asarray(f, dtype=float))
    return ifft(mult * fft(f, grid), grid)


def low_freq_cutoff(f: np.ndarray, grid: Grid, j: int) -> np.ndarray:
    """S_j f = sum of the blocks below j, i.e. multiplier eta(2^{-j} |k|)."""
    if j <= -1:
        return np.zeros_like(np.asarray(f, dtype=float))
    return ifft(eta(_mode_radius(grid) / 2.0**j) * fft(f, grid), grid)


def block_norms(f: np.ndarray, grid: Grid, p: float = 2.0) -> np.ndarray:
    """``||Delta_j f||_{L^p}`` for j = -1 .. max_block(grid).

    Vector fields (leading component axis) give the max over components.
    """
    f = np.asarray(f, dtype=float)
    f_hat = fft(f, grid)
    return block_norms_hat(f_hat, grid, p, vector=f.ndim > grid.d)


def block_norms_hat(f_hat: np.ndarray, grid: Grid, p: float, vector: bool = False) -> np.ndarray:
    out = []
    for j in range(-1, max_block(grid) + 1):
        blk = ifft(block_multiplier(grid, j) * f_hat, grid)
        if vector:
            out.append(max(lp_norm(c, grid, p) for c in blk))
        else:
            out.append(lp_norm(blk, grid, p))
    return np.asarray(out)


def besov_from_blocks(norms: np.ndarray, s: float, r: float) -> float:
    j = np.arange(-1, len(norms) - 1)
    weighted = 2.0 ** (j * s) * norms
    if r == np.inf:
        return float(weighted.max(initial=0.0))
    return float(np.sum(weighted**r) ** (1.0 / r))


def besov_norm(f: np.ndarray, grid: Grid, params: BesovParams) -> float:
    """``|| 2^{js} ||Delta_j f||_{L^p} ||_{l^r}`` summed from j = -1.

    The j = -1 term carries the weight 2^{-s}.  A vector field gets the max of
    its component norms.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim > grid.d:
        return max(besov_norm(c, grid, params) for c in f)
    return besov_from_blocks(block_norms(f, grid, params.p), params.s, params.r)
