import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eptorus.diagnostics import DirectionSpec, energy_h
from eptorus.dynamics import (
    Outcome, Reason, RhsForm, SimConfig, SimState, SnapshotCollector, integrate, rhs_convective,
    rhs_flux, step, velocity_of, velocity_to_momentum,
)
from eptorus.spectral import Grid, helmholtz_apply

from conftest import band_limited

TWO_PI = 2 * np.pi


def momentum(u, g):
    return np.stack([helmholtz_apply(c, g) for c in u])


def test_velocity_of_examples(rng):
    g = Grid((16, 16), TWO_PI)
    x1, x2 = g.mesh
    m = np.stack([2 * np.sin(x1) + 0 * x2, 0 * (x1 + x2)])
    assert np.max(np.abs(velocity_of(m, g)[0] - np.sin(x1))) < 1e-12
    c = np.stack([np.full(g.shape, 1.5), np.full(g.shape, -2.0)])
    assert np.max(np.abs(velocity_of(c, g) - c)) < 1e-14
    u = band_limited(g, rng, 5, comps=2)
    assert np.max(np.abs(velocity_of(momentum(u, g), g) - u)) < 1e-12 * np.max(np.abs(u))


def test_rhs_constant_exactly_zero():
    for g in (Grid((16, 12), 1.0), Grid((10,), 1.0), Grid((8, 8, 10), 2.0)):
        u = np.stack([np.full(g.shape, 0.3 * (i + 1)) for i in range(g.d)])
        for f in (rhs_convective, rhs_flux):
            assert np.all(f(u, u, g) == 0.0)


def test_rhs_1d_example():
    g = Grid((64,), TWO_PI)
    x = g.mesh[0]
    u = np.sin(x)[None]
    for f in (rhs_convective, rhs_flux):
        assert np.max(np.abs(f(u, momentum(u, g), g)[0] + 3 * np.sin(2 * x))) < 1e-11


def test_rhs_2d_example():
    g = Grid((32, 32), TWO_PI)
    x1, x2 = g.mesh
    u = np.stack([np.sin(x2) + 0 * x1, 0 * (x1 + x2)])
    expect = np.stack([0 * (x1 + x2), -np.sin(2 * x2) + 0 * x1])
    for f in (rhs_convective, rhs_flux):
        assert np.max(np.abs(f(u, momentum(u, g), g) - expect)) < 1e-11


@given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2, 3]))
def test_flux_matches_convective(seed, d):
    g = Grid((16,) * d, 1.0)
    u = band_limited(g, np.random.default_rng(seed), 4, comps=d)
    m = momentum(u, g)
    a, b = rhs_convective(u, m, g), rhs_flux(u, m, g)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


def test_config_validation():
    g = Grid((8, 8), 1.0)
    for kw in ({"cfl": 0.0}, {"cfl": 1.5}, {"dt_min": 0.0}, {"dt_min": 1.0, "dt_max": 0.5},
               {"detect_grad_factor": 1.0}, {"detect_tail_frac": 1.0}, {"t_end": -1.0}):
        args = {"t_end": 1.0, **kw}
        with pytest.raises(ValueError):
            SimConfig(g, **args)
    assert SimConfig(g, 1.0, rhs_form="flux").rhs_form is RhsForm.FLUX


def test_state_consistency(rng):
    g = Grid((16, 16), 1.0)
    u = band_limited(g, rng, 5, comps=2)
    st_ = SimState.from_velocity(u, g)
    assert np.max(np.abs(st_.u - u)) <= 1e-12 * np.max(np.abs(u))
    assert np.max(np.abs(velocity_of(st_.m, g) - st_.u)) <= 1e-12 * np.max(np.abs(u))
    with pytest.raises(ValueError):
        SimState.from_velocity(u[:1], g)


def test_step_constant_state():
    g = Grid((8, 8), 1.0)
    u = np.stack([np.full(g.shape, 0.4), np.full(g.shape, -0.1)])
    s0 = SimState.from_velocity(u, g)
    s1 = step(s0, 0.01, SimConfig(g, 1.0))
    assert s1.t == pytest.approx(0.01)
    assert np.array_equal(s1.m, s0.m)
    with pytest.raises(ValueError):
        step(s0, 0.0, SimConfig(g, 1.0))


def _smooth(g):
    x1, x2 = g.mesh
    return np.stack([0.3 * np.sin(TWO_PI * x2) + 0.2 * np.cos(TWO_PI * (x1 + x2)),
                     0.25 * np.cos(TWO_PI * x1) + 0 * x2])


def test_rk4_one_step_order():
    g = Grid((16, 16), 1.0)
    cfg = SimConfig(g, 1.0)
    s0 = SimState.from_velocity(_smooth(g), g)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        one = step(s0, dt, cfg)
        two = step(step(s0, dt / 2, cfg), dt / 2, cfg)
        errs.append(np.max(np.abs(one.m - two.m)))
    # one-step local error ~ dt^5
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 4.5


def test_integrate_order():
    g = Grid((16, 16), 1.0)
    u0 = _smooth(g)
    finals = []
    for dt in (0.02, 0.01, 0.005):
        rep = integrate(u0, SimConfig(g, 0.2, cfl=1.0, dt_max=dt))
        finals.append(rep.final_state.m)
    order = math.log2(np.max(np.abs(finals[0] - finals[1])) / np.max(np.abs(finals[1] - finals[2])))
    assert 3.8 <= order <= 4.2


def test_zero_data_completes():
    g = Grid((8, 8), 1.0)
    rep = integrate(np.zeros((2, 8, 8)), SimConfig(g, 0.1))
    assert rep.outcome is Outcome.COMPLETED and rep.t_final == 0.1
    assert np.all(rep.final_state.m == 0) and np.all(rep.column("H") == 0)


def test_energy_conserved_short_run():
    g = Grid((32, 32), 1.0)
    rep = integrate(_smooth(g), SimConfig(g, 0.1, dt_max=1e-3))
    H = rep.column("H")
    assert np.max(np.abs(H - H[0])) / H[0] <= 1e-6
    assert np.all(np.diff(rep.column("cum_grad_integral")) >= 0)
    assert np.all(np.diff(rep.column("t")) > 0)


def test_integrate_is_deterministic():
    g = Grid((16, 16), 1.0)
    cfg = SimConfig(g, 0.05)
    a = integrate(_smooth(g), cfg)
    b = integrate(_smooth(g), cfg)
    assert a.series == b.series


def test_observers_and_snapshots():
    g = Grid((16, 16), 1.0)
    seen = []
    col = SnapshotCollector(2)
    rep = integrate(_smooth(g), SimConfig(g, 0.05), [lambda s, i: seen.append(s.t), col])
    assert len(seen) == rep.steps + 1
    assert len(col.snapshots) == (rep.steps + 2) // 2


def test_gradient_threshold_fires():
    g = Grid((64, 8), 1.0)
    x1 = g.mesh[0] + 0 * g.mesh[1]
    F = -sum(np.sin(TWO_PI * k * x1) / k for k in (1, 2, 3))
    rep = integrate(np.stack([F, 0 * F]), SimConfig(g, 0.2, detect_grad_factor=1.5,
                                                    detect_tail_frac=0.99))
    assert rep.outcome is Outcome.BLOWUP_DETECTED and rep.reason is Reason.GRAD_THRESHOLD


def test_dt_floor_fires():
    g = Grid((16, 16), 1.0)
    rep = integrate(5 * _smooth(g), SimConfig(g, 0.1, dt_min=0.01))
    assert rep.reason is Reason.DT_FLOOR


def test_nan_reports_numerical_failure():
    g = Grid((8, 8), 1.0)
    u = _smooth(g)
    u[0, 0, 0] = np.inf
    rep = integrate(SimState(g, 0.0, u), SimConfig(g, 0.1))
    assert rep.outcome is Outcome.NUMERICAL_FAILURE and rep.reason is Reason.NAN


def test_blowup_series_exceeds_smooth_integral():
    g = Grid((64, 8), 1.0)
    x1 = g.mesh[0] + 0 * g.mesh[1]
    F = -sum(np.sin(TWO_PI * k * x1) / k for k in (1, 2, 3))
    blow = integrate(np.stack([F, 0 * F]), SimConfig(g, 0.2), direction=DirectionSpec((1, 0)))
    smooth = integrate(0.1 * _smooth(Grid((64, 8), 1.0)), SimConfig(g, blow.t_final))
    assert blow.outcome is Outcome.BLOWUP_DETECTED
    assert blow.cumulative_grad_integral > smooth.cumulative_grad_integral
    assert np.all(blow.column("dir_residual") <= 1e-8 * np.sqrt(blow.column("H")))
