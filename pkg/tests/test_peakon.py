import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from eptorus.peakon import (
    check_weak_form, make_test_field, peakon_field, phi_eval, phi_fourier, phi_prime,
    richardson, weak_residual, weak_terms,
)
from eptorus.scenarios import COTH_HALF, PeakonParams

T = 0.2


def test_phi_values():
    assert phi_eval(0.0) == pytest.approx(2.1639534, abs=1e-7)
    assert phi_eval(0.5) == pytest.approx(1 / math.sinh(0.5), abs=1e-12)
    assert phi_eval(0.5) == pytest.approx(1.9190348, abs=1e-7)


@given(st.floats(-5, 5))
def test_phi_symmetry(z):
    assert phi_eval(z) == pytest.approx(phi_eval(1 - z), rel=1e-12)
    assert phi_eval(z) == pytest.approx(phi_eval(z + 1), rel=1e-12)


def test_phi_prime_matches_difference():
    z = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (phi_eval(z + h) - phi_eval(z - h)) / (2 * h)
    assert np.max(np.abs(fd - phi_prime(z))) < 1e-8


def test_phi_fourier_against_quadrature():
    for k in range(-10, 11):
        w = 2 * math.pi * k
        re = quad(phi_eval, 0, 1, weight="cos", wvar=w, epsabs=1e-14)[0]
        im = quad(phi_eval, 0, 1, weight="sin", wvar=w, epsabs=1e-14)[0] if k else 0.0
        assert abs(re - phi_fourier(k)) < 1e-10 and abs(im) < 1e-10
    assert phi_fourier(0) == 2.0


def test_peakon_field():
    p = PeakonParams(1.0, (1, 0))
    assert np.allclose(peakon_field(p, 0.0, [0.0, 0.0]), COTH_HALF, rtol=0, atol=1e-14)
    x = np.array([[0.3, 0.7], [0.9, 0.1]])
    q = PeakonParams(1.3, (3, 4))
    for t in (0.1, 0.37):
        assert np.array_equal(peakon_field(q, t, x), peakon_field(q, 0.0, x - q.C * t * q.a)) or \
            np.allclose(peakon_field(q, t, x), peakon_field(q, 0.0, x - q.C * t * q.a), atol=1e-13)


def test_test_field_invariants():
    f = make_test_field(3, T)
    x = np.random.default_rng(0).uniform(0, 1, (50, 2))
    val, grad, hess = f.spatial(x)
    qT, _ = f.q(T)
    assert qT == 0.0 and np.all(qT * val == 0)
    g = make_test_field(3, T)
    assert np.array_equal(f.A, g.A) and np.array_equal(f.B, g.B) and np.array_equal(f.q_coef, g.q_coef)
    h = make_test_field(4, T)
    assert not np.array_equal(f.A, h.A)
    assert np.max(np.abs(f.modes)) <= 3
    with pytest.raises(ValueError):
        make_test_field(0, 0.0)


def test_test_field_derivatives():
    f = make_test_field(1, T)
    x = np.array([[0.21, 0.63]])
    val, grad, hess = f.spatial(x)
    h = 1e-5
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        vp, gp, _ = f.spatial(x + e)
        vm, gm, _ = f.spatial(x - e)
        assert np.allclose((vp - vm) / (2 * h), grad[:, :, k], atol=1e-6)
        assert np.allclose((gp - gm) / (2 * h), hess[:, :, :, k], atol=1e-5)
    q, dq = f.q(0.07)
    assert dq == pytest.approx((f.q(0.07 + 1e-6)[0] - f.q(0.07 - 1e-6)[0]) / 2e-6, rel=1e-6)


def test_zero_field_residual_vanishes():
    p = PeakonParams(0.0, (1, 0))
    f = make_test_field(0, T)
    terms = weak_terms(p, f, T, 8)
    assert terms.residual == 0.0 and terms.scale == 0.0


def test_residual_is_linear_in_test_field():
    p = PeakonParams(1.0, (1, 0))
    f = make_test_field(2, T)
    a = weak_residual(p, f, T, 8)
    b = weak_residual(p, f.scaled(3.5), T, 8)
    assert b == pytest.approx(3.5 * a, rel=1e-12)


def test_exact_peakon_converges_and_extrapolates():
    p = PeakonParams(1.0, (1, 0))
    f = make_test_field(1, T)
    chk = check_weak_form(p, f, T)
    assert chk.order >= 2 and chk.decay_order >= 2
    assert chk.relative <= 1e-6
    # past the pre-asymptotic regime each doubling shrinks the residual by <= 0.3
    assert abs(chk.residuals[2]) <= 0.3 * abs(chk.residuals[1])


def test_other_axis_directions():
    for z in [(0, 1), (-1, 0)]:
        p = PeakonParams(1.0, z)
        assert check_weak_form(p, make_test_field(0, T), T).relative <= 1e-6


def test_alignment_sanity():
    # the individual mass integral converges at full order only when the kink
    # sits on a cell boundary
    p = PeakonParams(1.0, (1, 0))
    f = make_test_field(0, T)
    ref = weak_terms(p, f, T, 64).mass
    orders = {}
    for off in (0.0, 0.3):
        e = [abs(weak_terms(p, f, T, c, offset=off).mass - ref) for c in (8, 16, 32)]
        orders[off] = math.log2(e[1] / e[2])
    assert orders[0.0] >= 2 and orders[0.3] <= 1.5


def test_wrong_speed_is_rejected():
    p = PeakonParams(1.0, (1, 0))
    bad = p.with_speed(p.C / 2)
    assert check_weak_form(bad, make_test_field(0, T), T).relative >= 1e-2


def test_input_validation():
    p = PeakonParams(1.0, (1, 0))
    f = make_test_field(0, T)
    with pytest.raises(ValueError):
        weak_terms(p, f, T, 2)
    with pytest.raises(ValueError):
        weak_terms(PeakonParams(1.0, (1, 0), sigma=0.1), f, T, 8)
    with pytest.raises(ValueError):
        weak_terms(PeakonParams(1.0, (1, 1)), f, T, 8)
    with pytest.raises(ValueError):
        weak_terms(p, f, T, 8, variant="other")


def test_richardson():
    vals = [1 + 0.5**4 * 3, 1 + 0.25**4 * 3, 1 + 0.125**4 * 3]
    lim, order = richardson(vals)
    assert lim == pytest.approx(1.0, abs=1e-13) and order == pytest.approx(4.0)
    with pytest.raises(ValueError):
        richardson([1.0])
