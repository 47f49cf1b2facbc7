import math

import numpy as np
import pytest

from slicing_reduction.bodies import AffineImage, Cube, EuclideanBall, RegularSimplex, VPolytope, random_vpolytope
from slicing_reduction.errors import ConfigError
from slicing_reduction.verifier import (
    CSV_COLUMNS, StageError, Theorem1Config, dn_limit_scan, symmetric_reduction_report, theorem1_verify,
    volume_bound_check,
)

TRIANGLE_L = 1 / math.sqrt(6 * math.sqrt(3))


def test_triangle_equality_pipeline():
    r = theorem1_verify(RegularSimplex(2))
    assert abs(r.ratio - 1) <= 1e-6 and r.passed and r.equality
    assert r.L_K == pytest.approx(TRIANGLE_L, rel=1e-12)
    assert r.V == pytest.approx(6 / math.sqrt(15), abs=1e-8)
    assert r.L_ball == pytest.approx(math.sqrt(2) * TRIANGLE_L / r.V, rel=1e-12)
    assert r.D_n == pytest.approx(6 / math.sqrt(30), rel=1e-15)
    assert len(r.csv_row()) == len(CSV_COLUMNS)


def test_any_triangle_is_an_equality_case():
    r = theorem1_verify(VPolytope([[0, 0], [3, 0.4], [0.2, 1.1]]))
    assert r.equality and abs(r.ratio - 1) <= 1e-6


@pytest.mark.parametrize("body", [Cube(2), EuclideanBall.of_volume(2)])
def test_strict_for_cube_and_disk(body):
    r = theorem1_verify(body)
    assert r.passed and not r.equality
    assert 1 - r.ratio > 5 * max(r.ratio_error, 1e-15)


def test_stretched_cube_same_as_cube():
    a = theorem1_verify(Cube(2))
    b = theorem1_verify(AffineImage(Cube(2), np.diag([2.0, 0.5]), [1.0, -1.0]))
    assert b.ratio == pytest.approx(a.ratio, rel=1e-9)


def test_three_dimensional_simplex_and_cube():
    s = theorem1_verify(RegularSimplex(3))
    assert abs(s.ratio - 1) <= 1e-3 and s.equality
    c = theorem1_verify(Cube(3))
    assert c.passed and not c.equality and c.ratio < 0.95


def test_ratio_formula_consistency():
    # ratio = L_K / (D_n L_ball) = (V / bound)^((n+2)/(2n))
    from slicing_reduction.combinatorics import volume_bound
    for body in (Cube(2), Cube(3)):
        r = theorem1_verify(body)
        n = body.dim
        assert r.ratio == pytest.approx((r.V / volume_bound(n)) ** ((n + 2) / (2 * n)), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_random_polygons_mc(seed):
    body = random_vpolytope(2, seed)
    r = theorem1_verify(body, Theorem1Config(seed=seed, samples=40_000, directions=48))
    assert r.passed
    if len(body.vertices) > 3:
        assert r.backend == "mc" and not r.equality
    else:
        assert r.equality


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_random_polytopes_3d_mc(seed):
    body = random_vpolytope(3, seed)
    r = theorem1_verify(body, Theorem1Config(seed=seed, samples=20_000, directions=256))
    assert r.passed and r.ratio_error < 0.05


def test_mc_isotropy_route():
    r = theorem1_verify(Cube(2), Theorem1Config(isotropy="mc", samples=50_000))
    assert r.passed and abs(r.L_K - math.sqrt(1 / 12)) <= 4 * r.L_K_error


def test_unnormalized_body_rejected_without_normalization():
    with pytest.raises(ConfigError):
        theorem1_verify(Cube(2, 2.0), Theorem1Config(normalize=False))


def test_stage_errors_are_tagged():
    class Broken(Cube):
        def moments(self, *a, **k):
            raise FloatingPointError("boom")

    with pytest.raises(StageError) as info:
        theorem1_verify(Broken(2))
    assert info.value.stage == "isotropy" and isinstance(info.value.cause, FloatingPointError)


def test_config_errors_pass_through_untagged():
    with pytest.raises(ConfigError):
        theorem1_verify(Cube(2), Theorem1Config(isotropy="mc", samples=10))


def test_stage_error_for_bad_backend():
    with pytest.raises(ConfigError):
        theorem1_verify(Cube(2), Theorem1Config(backend="grid"))


def test_volume_bound_check():
    tri = volume_bound_check(RegularSimplex(2))
    assert tri.passed and tri.values["equality"]
    assert tri.values["bound"] == pytest.approx(6 / math.sqrt(15), rel=1e-15)
    assert tri.values["bound"] == pytest.approx(1.549193, abs=1e-6)
    cube = volume_bound_check(Cube(2))
    assert cube.passed and not cube.values["equality"] and cube.values["gap"] > 0.1
    with pytest.raises(ConfigError):
        volume_bound_check(Cube(2, 3.0))


@pytest.mark.parametrize("body", [RegularSimplex(2), Cube(2), EuclideanBall.of_volume(2), RegularSimplex(3)])
def test_symmetric_reduction(body):
    rep = symmetric_reduction_report(body)
    assert rep.passed and rep.values["asymmetry"] <= 1e-9
    assert rep.values["reduction_constant"] == pytest.approx(float(__import__("slicing_reduction").dn(body.dim).value))
    if body.dim == 2:
        assert abs(rep.values["volume_T"] - 1) <= 3 * rep.error + 1e-12
        # identity route and direct polar moments of T agree
        assert rep.values["L_T_direct"] == pytest.approx(rep.values["L_T_identity"], rel=1e-9)
    else:
        assert rep.values["volume_T"] == pytest.approx(1, abs=1e-9)


def test_triangle_reduction_is_a_scaled_hexagon():
    rep = symmetric_reduction_report(RegularSimplex(2))
    u = rep.details["directions"]
    hexagon = RegularSimplex(2).difference_body()
    ratio = rep.details["radial_T"] / hexagon.radial(u)
    assert np.ptp(ratio) <= 1e-12
    assert ratio[0] ** 2 * hexagon.volume() == pytest.approx(1, rel=1e-12)


def test_dn_limit_scan():
    rep = dn_limit_scan([1, 2, 10, 100])
    rows = {r["n"]: r for r in rep.values["rows"]}
    assert rep.passed
    assert rows[1]["D_n"] == 1 and rows[1]["gap"] == pytest.approx(0.4142, abs=1e-4)
    assert 1.35 < rows[100]["D_n"] < 1.40
    assert rows[100]["D_n"] == pytest.approx(1.38433, abs=1e-5)
    assert rows[1]["gap"] > rows[2]["gap"] > rows[10]["gap"] > rows[100]["gap"] > 0
    with pytest.raises(ConfigError):
        dn_limit_scan([])
