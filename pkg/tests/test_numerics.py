import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from slicing_reduction.errors import DomainError
from slicing_reduction.numerics import (
    QuadratureResult, blocked_draw, gen_binom, integrate_adaptive, integrate_ray_moment, log_gamma,
    panel_rule, sphere_directions, stream, unit_ball_volume,
)


@pytest.mark.parametrize("x,want", [(1.0, 0.0), (4.0, math.log(6)), (0.5, math.log(math.sqrt(math.pi)))])
def test_log_gamma_examples(x, want):
    assert abs(log_gamma(x) - want) <= 1e-13 * max(1, abs(want))


def test_log_gamma_domain():
    with pytest.raises(DomainError):
        log_gamma(0.0)


@pytest.mark.parametrize("x,y,want", [(4, 2, 6), (3, 1, 3), (2.5, 0.5, 15 / 8)])
def test_gen_binom_examples(x, y, want):
    assert gen_binom(x, y) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("x,y", [(1.0, 2.0), (1.0, 0.0), (-1.0, -2.0)])
def test_gen_binom_domain(x, y):
    with pytest.raises(DomainError):
        gen_binom(x, y)


@given(st.floats(0.01, 40), st.floats(0.01, 1.0))
@settings(max_examples=200, deadline=None)
def test_gen_binom_symmetry_and_scipy(x, frac):
    y = x * frac
    if y <= 0 or x - y <= 0:
        return
    assert gen_binom(x, y) == pytest.approx(gen_binom(x, x - y), rel=1e-12)
    assert gen_binom(x, y) == pytest.approx(special.binom(x, y), rel=1e-10)


def test_gen_binom_integer_agreement():
    for n in range(1, 40):
        for k in range(1, n + 1):
            assert gen_binom(n, k) == pytest.approx(math.comb(n, k), rel=1e-12)


@pytest.mark.parametrize("f,want", [
    (lambda t: 2 * t, 1.0),
    (lambda t: 2 * t * (1 - t), 1 / 3),
    (lambda t: 3 * t ** 2 * (1 - t) ** 2, 1 / 10),
])
def test_integrate_examples(f, want):
    res = integrate_adaptive(f, 0.0, 1.0, tol=1e-12)
    assert res.converged and abs(res.value - want) <= 1e-12


def test_integrate_against_scipy_oracle():
    f = lambda t: np.sqrt(np.abs(t - 0.3)) * np.exp(-t)
    res = integrate_adaptive(f, 0.0, 2.0, tol=1e-11)
    want, _ = integrate.quad(f, 0.0, 2.0, points=[0.3], epsabs=1e-13)
    assert abs(res.value - want) <= max(1e-10, res.abs_error_estimate)


def test_integrate_linearity():
    f = lambda t: np.cos(3 * t)
    g = lambda t: t ** 1.5
    a, b = 2.0, -0.7
    rf, rg = integrate_adaptive(f, 0, 1), integrate_adaptive(g, 0, 1)
    rc = integrate_adaptive(lambda t: a * f(t) + b * g(t), 0, 1)
    bound = abs(a) * rf.abs_error_estimate + abs(b) * rg.abs_error_estimate + rc.abs_error_estimate
    assert abs(rc.value - (a * rf.value + b * rg.value)) <= max(bound, 1e-14)


def test_integrate_reports_nonconvergence():
    res = integrate_adaptive(lambda t: np.sign(np.sin(1 / np.maximum(t, 1e-300))), 0.0, 1.0,
                             tol=1e-15, max_intervals=20)
    assert not res.converged and res.abs_error_estimate > 0


def test_integrate_domain():
    with pytest.raises(DomainError):
        integrate_adaptive(np.sin, 1.0, 0.0)


def test_quadrature_result_invariants():
    with pytest.raises(ValueError):
        QuadratureResult(1.0, -1.0, 1)


@pytest.mark.parametrize("p", [0.2, 0.5, 1.0, 2.7, 6.0])
def test_ray_moment_beta_oracle(p):
    # int_0^1 p t^(p-1) (1-t)^2 dt = p B(p, 3)
    res = integrate_ray_moment(lambda t: (1 - t) ** 2, p, 1.0, tol=1e-14, rel_tol=1e-14)
    assert res.value == pytest.approx(p * special.beta(p, 3), rel=1e-11)


def test_ray_moment_breakpoints_and_empty():
    f = lambda t: np.minimum(1.0, 2 - 2 * t)
    res = integrate_ray_moment(f, 2.0, 1.0, breakpoints=[0.5])
    want = 0.25 + integrate.quad(lambda t: 2 * t * (2 - 2 * t), 0.5, 1)[0]
    assert res.value == pytest.approx(want, abs=1e-13)
    assert integrate_ray_moment(f, 1.0, 0.0).value == 0.0


def test_streams_are_keyed():
    a = stream(3, 1, 2).random(5)
    assert np.array_equal(a, stream(3, 1, 2).random(5))
    assert not np.array_equal(a, stream(3, 1, 3).random(5))
    assert not np.array_equal(a, stream(4, 1, 2).random(5))


def test_blocked_draw_independent_of_total():
    draw = lambda gen, m: gen.standard_normal((m, 2))
    big = blocked_draw(1, 9, 5000, draw)
    small = blocked_draw(1, 9, 2048, draw)
    assert np.array_equal(big[:2048], small)


def test_sphere_directions_examples():
    d = sphere_directions(2, 4, 123)
    assert np.allclose(d.vectors, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    d8 = sphere_directions(2, 8, 5).vectors
    for u in d8:
        assert np.min(np.linalg.norm(d8 + u, axis=1)) < 1e-12
    d3 = sphere_directions(3, 1000, 7)
    assert np.allclose(np.linalg.norm(d3.vectors, axis=1), 1, atol=1e-12)
    assert np.linalg.norm(d3.vectors.mean(axis=0)) <= 0.1
    assert np.array_equal(d3.vectors, sphere_directions(3, 1000, 7).vectors)
    assert d3.mode == "uniform" and d.mode == "grid"


def test_sphere_directions_domain():
    with pytest.raises(DomainError):
        sphere_directions(1, 3)


def test_unit_ball_volume():
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("cuts", [[], [0.3, 2.0, 4.5], [0.0, np.pi / 2, np.pi, 3 * np.pi / 2, 2 * np.pi]])
def test_panel_rule_integrates_trig(cuts):
    u, w = panel_rule(cuts, 128)
    assert w.sum() == pytest.approx(2 * np.pi, rel=1e-14)
    assert np.allclose(np.linalg.norm(u, axis=1), 1)
    ang = np.arctan2(u[:, 1], u[:, 0])
    assert w @ np.cos(ang) ** 4 == pytest.approx(3 * np.pi / 4, rel=1e-13)
    # piecewise smooth integrand with kinks exactly at the cuts
    if cuts:
        c = np.mod(cuts[1], 2 * np.pi)
        f = lambda a: np.abs(np.sin((a - c) / 2))
        assert w @ f(ang) == pytest.approx(4.0, rel=1e-12)
