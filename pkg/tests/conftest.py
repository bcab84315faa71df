import numpy as np
import pytest
from hypothesis import settings

from eptorus.spectral import Grid, fft, ifft

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


def band_limited(grid: Grid, rng: np.random.Generator, kmax: int, comps: int | None = None):
    """Random real field with modes |k_i| <= kmax on every axis."""
    shape = grid.spectral_shape if comps is None else (comps,) + grid.spectral_shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for k in grid.mode_index:
        keep &= np.abs(k) <= kmax
    f = ifft(c * keep, grid)
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one ``PASS``/``FAIL`` line per checked quantity."""

    def emit(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        VERDICTS.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
