import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from slicing_reduction.alpha1d import AlphaConcave1D, RadialProfile
from slicing_reduction.ballbodies import (
    BallBodyQuery, ballbody_radial, ballbody_volume, equality_case_fingerprint, inclusion_alpha_check,
    inclusion_logconcave_check, moment_transfer_check, radial_table,
)
from slicing_reduction.bodies import Cube, EuclideanBall, RegularSimplex, isotropic_normalize, random_vpolytope
from slicing_reduction.covariogram import Covariogram
from slicing_reduction.errors import DomainError
from slicing_reduction.numerics import gen_binom, sphere_directions

TRI = Covariogram(RegularSimplex(2))
CUBE = Covariogram(Cube(2))
DISK = Covariogram(EuclideanBall.of_volume(2))


def test_cube_radial_example():
    assert ballbody_radial(BallBodyQuery(CUBE, 2), [1, 0]) == pytest.approx(math.sqrt(1 / 3), abs=1e-14)


@pytest.mark.parametrize("p", [0.4, 1.0, 2.0, 4.0, 9.5])
def test_triangle_radial_closed_form(p):
    u = sphere_directions(2, 37).vectors
    rho, _ = radial_table(BallBodyQuery(TRI, p), u)
    want = TRI.support_radial(u) * (2 / ((p + 1) * (p + 2))) ** (1 / p)
    assert np.allclose(rho, want, rtol=1e-11)


def test_radial_against_scipy_quad_oracle():
    u = np.array([0.28, 0.96])
    for g in (CUBE, DISK):
        f, r = g.ray(u)
        for p in (0.5, 3.0):
            m, _ = integrate.quad(lambda t: p * t ** (p - 1) * f(np.array([t]))[0], 0, r, epsabs=1e-14, limit=200)
            want = (m / g.value_at_origin) ** (1 / p)
            assert ballbody_radial(BallBodyQuery(g, p), u) == pytest.approx(want, rel=1e-9)


def test_even_source_gives_symmetric_body():
    body = random_vpolytope(2, 2)  # a triangle, closed form
    g = Covariogram(body)
    u = sphere_directions(2, 64).vectors
    a, _ = radial_table(BallBodyQuery(g, 3.0), u)
    b, _ = radial_table(BallBodyQuery(g, 3.0), -u)
    assert np.max(np.abs(a - b)) <= 1e-9


def test_query_validation():
    with pytest.raises(DomainError):
        BallBodyQuery(TRI, 0.0)
    assert BallBodyQuery(TRI, 2).concavity == 0.5
    assert BallBodyQuery(TRI, 2, alpha=0.2).concavity == 0.2


def test_volume_examples_triangle():
    v4, e4 = ballbody_volume(BallBodyQuery(TRI, 4), 256)
    assert abs(v4 - 6 / math.sqrt(15)) <= 1e-8 and e4 <= 1e-8
    v2, _ = ballbody_volume(BallBodyQuery(TRI, 2), 256)
    assert v2 == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("g", [TRI, CUBE, DISK, Covariogram(RegularSimplex(3)), Covariogram(Cube(3))])
def test_p_equals_n_gives_unit_volume(g):
    v, e = ballbody_volume(BallBodyQuery(g, g.dim), 256 if g.dim == 2 else 4096)
    assert abs(v - 1) <= max(3 * e, 1e-9)


def test_disk_ball_body_is_a_disk():
    # radial constant in u, so the planar rule must be exact
    v, e = ballbody_volume(BallBodyQuery(DISK, 4), 64)
    r = ballbody_radial(BallBodyQuery(DISK, 4), [1, 0])
    assert v == pytest.approx(math.pi * r * r, rel=1e-12)


def test_volume_error_shrinks_and_brackets_truth():
    exact = 6 / math.sqrt(15)
    cube3 = Covariogram(Cube(3))
    v1, e1 = ballbody_volume(BallBodyQuery(cube3, 5), 512, seed=1)
    v2, e2 = ballbody_volume(BallBodyQuery(cube3, 5), 4096, seed=2)
    assert e2 < e1 and abs(v1 - v2) <= 3 * math.hypot(e1, e2)
    for count in (16, 32, 64):
        v, e = ballbody_volume(BallBodyQuery(TRI, 4), count)
        assert abs(v - exact) <= e


def test_volume_one_dimensional_profile():
    f = AlphaConcave1D.extremal(1.0, 2.0)
    v, _ = ballbody_volume(BallBodyQuery(RadialProfile(f, 1), 1.0))
    assert v == pytest.approx(2.0, abs=1e-12)  # rho_1 = int g = 1 each side


def test_workers_do_not_change_results():
    cube3 = Covariogram(Cube(3))
    a = ballbody_volume(BallBodyQuery(cube3, 5), 1024, seed=3, workers=1)
    b = ballbody_volume(BallBodyQuery(cube3, 5), 1024, seed=3, workers=8)
    assert a == b


def test_mc_backend_volume():
    g = Covariogram(Cube(2), backend="mc", samples=100_000, seed=4)
    v, e = ballbody_volume(BallBodyQuery(g, 2), 64)
    assert abs(v - 1) <= 3 * e and e < 0.02


@pytest.mark.parametrize("g,theta", [(TRI, [1, 0]), (CUBE, [1, 0]), (TRI, [0.6, 0.8])])
def test_moment_transfer_p2(g, theta):
    rep = moment_transfer_check(BallBodyQuery(g, 4), theta, 2.0, samples=20_000, seed=1)
    assert rep.passed
    if g is CUBE:
        assert rep.values["right"] == pytest.approx(1 / 6, abs=3 * rep.error)


def test_moment_transfer_p0_both_sides_one():
    rep = moment_transfer_check(BallBodyQuery(TRI, 2), [1, 0], 0.0, samples=20_000)
    assert rep.passed
    assert rep.values["left"] == pytest.approx(1, abs=0.03) and rep.values["right"] == pytest.approx(1, abs=0.03)


def test_moment_transfer_mc_quadrilateral():
    quad = isotropic_normalize(random_vpolytope(2, 5, points=4))
    g = Covariogram(quad, backend="mc", samples=40_000, seed=2)
    rep = moment_transfer_check(BallBodyQuery(g, 4), [1, 0], 2.0, samples=400, seed=3)
    assert rep.passed


def test_moment_transfer_rejects_wrong_exponent():
    with pytest.raises(DomainError):
        moment_transfer_check(BallBodyQuery(TRI, 3), [1, 0], 2.0)


def test_logconcave_inclusion_factor_and_chain():
    rep = inclusion_logconcave_check(CUBE, 1, 2, 64)
    assert rep.passed and rep.values["factor"] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    rep = inclusion_logconcave_check(CUBE, 2, 4, 64)
    assert rep.passed and rep.values["worst_left_margin"] >= -1e-8 and rep.values["worst_right_margin"] >= -1e-8
    same = inclusion_logconcave_check(TRI, 2, 2, 16)
    assert same.passed and abs(same.values["worst_right_margin"]) <= 1e-12


def test_alpha_inclusion_equality_for_triangle():
    for p, q in [(1, 2), (2, 4), (0.5, 7)]:
        rep = inclusion_alpha_check(TRI, None, p, q, 64)
        assert rep.passed and rep.values["max_abs_margin"] <= 1e-8


def test_alpha_inclusion_strict_for_cube():
    rep = inclusion_alpha_check(CUBE, None, 2, 4, 64)
    assert rep.passed and rep.values["max_margin"] > 1e-3


def test_alpha_inclusion_one_dimensional_extremal():
    src = RadialProfile(AlphaConcave1D.extremal(1.0, 1.0), 1)
    rep = inclusion_alpha_check(src, 1.0, 1, 2)
    assert rep.passed and rep.values["max_abs_margin"] <= 1e-12
    (rp,), _ = radial_table(BallBodyQuery(src, 1), np.array([[1.0]]))
    assert gen_binom(2, 1) * rp == pytest.approx(1, abs=1e-14)


def test_alpha_inclusion_detects_wrong_alpha():
    # the cube covariogram is 1/2-concave but not 1-concave
    rep = inclusion_alpha_check(CUBE, 1.0, 1, 4, 64)
    assert not rep.passed and rep.values["worst_margin"] < 0


@given(st.floats(0.2, 6), st.floats(0.01, 6))
@settings(max_examples=30, deadline=None)
def test_scaled_radial_monotone_in_p(p, dq):
    q = p + dq
    for g in (CUBE, DISK):
        assert inclusion_alpha_check(g, None, p, q, 12).passed
        assert inclusion_logconcave_check(g, p, q, 12).passed


def test_fingerprints():
    assert equality_case_fingerprint(TRI).values["fingerprint"] <= 1e-8
    assert equality_case_fingerprint(Covariogram(RegularSimplex(3)), directions=32).passed
    assert equality_case_fingerprint(CUBE).values["fingerprint"] >= 0.01
    src = RadialProfile(AlphaConcave1D.extremal(0.25, 1.5), 2)
    assert equality_case_fingerprint(src).values["fingerprint"] <= 1e-15
