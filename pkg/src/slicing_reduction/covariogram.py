"""Covariogram g_K(x) = |K ∩ (x + K)| with closed-form and Monte Carlo
backends, plus the property checks built on it.

Closed forms exist for (affine images of) cubes, Euclidean balls and
simplices; everything else uses a fixed set of uniform samples ``y`` in K,
for which g(x) = |K| P(y - x in K). Along a ray the Monte Carlo backend does
not need to evaluate g at all:

    int_0^inf k t^(k-1) g(t u) dt = |K| E_y[ exit(y, -u)^k ]

where ``exit(y, v)`` is the distance from y to the boundary along v.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import betaincc

from .bodies import AffineImage, ConvexBody, Cube, EuclideanBall, VPolytope
from .errors import ConfigError, DomainError
from .numerics import (blocked_draw, integrate_ray_moment, panel_rule_pair, sphere_directions,
                       stream, unit_ball_volume)
from .report import VerificationReport

TAG_COV_SAMPLES = 41
TAG_SUPPORT_SAMPLES = 42
TAG_PAIRS = 43
TAG_RIGHT = 44
TAG_TRIALS = 45

CLOSED_FORM_TOL = 1e-9
QUAD_TOL = 1e-13
MC_DENSITY_POINTS = 1000  # each MC evaluation scans the whole sample set


def _unwrap(body: ConvexBody):
    """Linear part T and innermost base of nested affine images (shifts drop
    out: the covariogram is translation invariant)."""
    t = np.eye(body.dim)
    while isinstance(body, AffineImage):
        t = t @ body.matrix
        body = body.base
    return t, body


def _closed_kind(base: ConvexBody) -> str | None:
    if isinstance(base, Cube):
        return "cube"
    if isinstance(base, EuclideanBall):
        return "ball"
    if isinstance(base, VPolytope) and len(base.vertices) == base.dim + 1:
        return "simplex"
    return None


def ball_covariogram(d, radius: float, dim: int):
    """Volume of the lens between two radius-r balls at center distance d
    (two caps, via the regularized incomplete Beta function).

    I_{1-h^2}((n+1)/2, 1/2) is evaluated as its complement in h^2 so that
    small distances do not lose digits to the cancellation in 1 - h^2.
    """
    d = np.asarray(d, dtype=float)
    h = np.clip(d / (2.0 * radius), 0.0, 1.0)
    vol = unit_ball_volume(dim) * radius ** dim
    return np.where(h < 1.0, vol * betaincc(0.5, (dim + 1) / 2.0, h * h), 0.0)


class Covariogram:
    """g_K for a convex body K.

    ``backend`` is ``"closed"``, ``"mc"`` or ``"auto"`` (closed form when K is
    an affine image of a cube, ball or simplex).
    """

    def __init__(self, body: ConvexBody, backend: str = "auto", samples: int = 200_000,
                 seed: int = 0, batches: int = 10):
        self.body = body
        self.dim = body.dim
        self.volume = body.volume()
        self.support = body.difference_body()
        self.support_volume = self.support.volume()
        self.linear, self.base = _unwrap(body)
        self.inverse = np.linalg.inv(self.linear)
        self.jacobian = abs(float(np.linalg.det(self.linear)))
        self.kind = _closed_kind(self.base)
        if backend == "auto":
            backend = "closed" if self.kind else "mc"
        if backend == "closed" and self.kind is None:
            raise ConfigError(f"no closed-form covariogram for {type(self.base).__name__}")
        if backend not in ("closed", "mc"):
            raise ConfigError(f"unknown covariogram backend {backend!r}")
        self.backend = backend
        self.samples = samples
        self.seed = seed
        self.batches = batches
        self._y = None
        if self.kind == "simplex":
            self._base_diff = self.base.difference_body()
        self.alpha = 1.0 / self.dim

    # -- basic evaluation ----------------------------------------------------
    @property
    def value_at_origin(self) -> float:
        return self.volume

    @property
    def points(self) -> np.ndarray:
        if self._y is None:
            self._y = self.body.sample(self.samples, self.seed, TAG_COV_SAMPLES)
        return self._y

    def _closed(self, x):
        z = x @ self.inverse.T
        if self.kind == "cube":
            s = self.base.side
            val = np.prod(np.clip(s - np.abs(z), 0.0, None), axis=1)
        elif self.kind == "ball":
            val = ball_covariogram(np.linalg.norm(z, axis=1), self.base.radius, self.dim)
        else:
            norm = np.atleast_1d(self._base_diff.minkowski(z))
            val = self.base.volume() * np.clip(1.0 - norm, 0.0, None) ** self.dim
        return self.jacobian * val

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Values and standard errors (zero for closed forms) at points ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise DomainError("point dimension does not match the covariogram")
        if self.backend == "closed":
            return self._closed(x), np.zeros(len(x))
        y = self.points
        frac = np.array([self.body.contains(y - xi).mean() for xi in x])
        return self.volume * frac, self.volume * np.sqrt(frac * (1 - frac) / len(y))

    def __call__(self, x):
        return self.evaluate(x)[0]

    # -- rays ------------------------------------------------------------------
    def support_radial(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return self.support.exit_distance(np.zeros_like(u), u)

    def ray(self, u) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
        """t -> g(t u) (vectorized in t) and the support radius along u."""
        u = np.asarray(u, dtype=float)
        return (lambda t: self(np.multiply.outer(np.atleast_1d(t), u))), float(self.support_radial(u)[0])

    def ray_moments(self, u, orders) -> dict[float, tuple[np.ndarray, np.ndarray]]:
        """For each order k: per-direction  int_0^inf k t^(k-1) g(t u) dt  and its error.

        Monte Carlo errors come from batch means over the sample set.
        """
        u = np.atleast_2d(np.asarray(u, dtype=float))
        orders = [float(k) for k in orders]
        if self.backend == "closed":
            out = {k: (np.empty(len(u)), np.empty(len(u))) for k in orders}
            radii = self.support_radial(u)
            for i, (ui, r) in enumerate(zip(u, radii)):
                f = lambda t, ui=ui: self._closed(np.multiply.outer(t, ui))
                for k in orders:
                    res = integrate_ray_moment(f, k, r, tol=QUAD_TOL, rel_tol=QUAD_TOL)
                    out[k][0][i] = res.value
                    out[k][1][i] = res.abs_error_estimate
            return out
        batches = self.ray_moment_batches(u, orders)
        return {k: (b.mean(axis=0), b.std(axis=0, ddof=1) / math.sqrt(len(b))) for k, b in batches.items()}

    def ray_moment_batches(self, u, orders) -> dict[float, np.ndarray]:
        """Monte Carlo ray moments per sample batch, shape (batches, len(u))."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        y = self.points
        groups = np.array_split(np.arange(len(y)), self.batches)
        out = {float(k): np.empty((self.batches, len(u))) for k in orders}
        for j, uj in enumerate(u):
            ex = self.body.exit_distance(y, -uj)
            for k in out:
                powered = ex ** k
                for b, idx in enumerate(groups):
                    out[k][b, j] = self.volume * powered[idx].mean()
        return out

    def angular_breakpoints(self) -> np.ndarray:
        """Planar directions (angles) where rays change their functional form."""
        if self.dim != 2:
            return np.empty(0)
        pts = []
        diff = self.base.difference_body()
        if isinstance(diff, VPolytope):
            pts.append(diff.vertices)
        elif isinstance(diff, Cube):
            pts.append(diff.vertices())
        if self.kind == "cube" and self.backend == "closed":
            pts.append(np.vstack([np.eye(2), -np.eye(2)]))
        if not pts:
            return np.empty(0)
        world = np.vstack(pts) @ self.linear.T
        return np.mod(np.arctan2(world[:, 1], world[:, 0]), 2 * np.pi)

    def sample_support(self, count: int, seed: int) -> np.ndarray:
        return self.support.sample(count, seed, TAG_SUPPORT_SAMPLES)

    def describe(self) -> dict:
        return {"body": self.body.to_json(), "backend": self.backend,
                "samples": self.samples if self.backend == "mc" else None,
                "seed": self.seed if self.backend == "mc" else None}


def covariogram_eval(g: Covariogram, x) -> tuple[float, float]:
    v, e = g.evaluate(np.asarray(x, dtype=float)[None, :])
    return float(v[0]), float(e[0])


def polar_integral(g: Covariogram, angular: Callable[[np.ndarray], np.ndarray], power: float,
                   directions: int = 256, seed: int = 0) -> tuple[float, float]:
    """int_{R^n} |x|^power * angular(x/|x|) * g(x) dx in polar coordinates.

    The radial part is the ray moment of order n + power. Planar bodies use a
    panelled Gauss-Legendre angular rule split at the kinks of the rays;
    higher dimensions use uniform directions with the support body as a
    control variate.
    """
    order = g.dim + power
    if g.dim == 2:
        vals = []
        for u, w in panel_rule_pair(g.angular_breakpoints(), directions):
            m, e = g.ray_moments(u, [order])[order]
            vals.append((float(w @ (angular(u) * m)) / order, float(w @ (np.abs(angular(u)) * e)) / order))
        (v, qe), (v_half, _) = vals
        return v, abs(v - v_half) + qe
    dirs = sphere_directions(g.dim, directions, seed).vectors
    m, e = g.ray_moments(dirs, [order])[order]
    f = angular(dirs) * m / order
    c = g.support_radial(dirs) ** g.dim
    total = g.dim * g.support_volume
    r = f.mean() / c.mean()
    se = total * np.sqrt(np.var(f - r * c, ddof=1) / len(f)) / c.mean()
    return float(total * r), float(se + total * np.mean(np.abs(e)) / order / c.mean())


# -- property checks ------------------------------------------------------------

def check_probability_density(g: Covariogram, samples: int = 200_000, seed: int = 0) -> VerificationReport:
    """int g = |K|^2, by uniform Monte Carlo over the support K - K."""
    x = g.sample_support(samples, seed)
    if g.backend == "closed":
        vals = g(x) * g.support_volume
        est = vals.mean()
        err = vals.std(ddof=1) / math.sqrt(samples)
    else:
        m = min(samples, MC_DENSITY_POINTS)
        vals, se = g.evaluate(x[:m])
        vals = vals * g.support_volume
        est = vals.mean()
        err = math.hypot(vals.std(ddof=1) / math.sqrt(m), g.support_volume * se.mean())
    target = g.volume ** 2
    return VerificationReport("probability_density", abs(est - target) <= 3 * err,
                              {"integral": est, "expected": target}, 3.0, err)


def check_one_over_n_concavity(g: Covariogram, trials: int = 1000, seed: int = 0,
                               tol: float = 1e-9, min_level: float = 0.05) -> VerificationReport:
    """g((x+y)/2)^(1/n) >= (g(x)^(1/n) + g(y)^(1/n))/2 on random support pairs.

    Closed forms use the absolute ``tol``. The Monte Carlo backend compares at
    3 combined standard errors (delta method in the 1/n-power domain) and
    only uses points with g >= min_level * |K|, away from the support boundary.
    """
    n = g.dim
    gen = stream(seed, TAG_TRIALS)
    pts = g.sample_support(8 * trials, seed)
    x, y = pts[: 4 * trials], pts[4 * trials:]
    gx, ex = g.evaluate(x)
    gy, ey = g.evaluate(y)
    if g.backend == "mc":
        keep = np.flatnonzero((gx >= min_level * g.volume) & (gy >= min_level * g.volume))
    else:
        keep = np.arange(len(x))
    keep = keep[gen.permutation(len(keep))][:trials]
    x, y, gx, gy, ex, ey = x[keep], y[keep], gx[keep], gy[keep], ex[keep], ey[keep]
    gm, em = g.evaluate(0.5 * (x + y))
    a = 1.0 / n
    margin = gm ** a - 0.5 * (gx ** a + gy ** a)
    if g.backend == "mc":
        def d(v, e):
            return a * np.maximum(v, 1e-300) ** (a - 1) * e
        allowed = 3.0 * np.sqrt(d(gm, em) ** 2 + 0.25 * (d(gx, ex) ** 2 + d(gy, ey) ** 2))
    else:
        allowed = np.full(len(margin), tol)
    violations = int(np.sum(margin < -allowed))
    worst = int(np.argmin(margin + allowed)) if len(margin) else 0
    return VerificationReport(
        "one_over_n_concavity", violations == 0,
        {"trials": len(margin), "violations": violations,
         "worst_margin": float(margin.min()) if len(margin) else 0.0},
        tol if g.backend == "closed" else 3.0, float(allowed[worst]) if len(margin) else 0.0)


def _require_normalized(body: ConvexBody, tol: float = 1e-9):
    vol, bary, _ = body.moments()
    if abs(vol - 1.0) > tol or np.abs(bary).max() > tol:
        raise DomainError("body must be centered with volume 1")


def second_moment_identity(g: Covariogram, theta, samples: int = 1_000_000, seed: int = 0,
                           directions: int = 256) -> VerificationReport:
    """int <x,theta>^2 g(x) dx  versus  2 int_K <x,theta>^2 dx  for centered |K| = 1.

    Closed forms: left by polar quadrature, right from the exact moments.
    Monte Carlo: left from independent pairs y - z (density g/|K|^2 on K - K),
    right from a separate uniform sample of K.
    """
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    _require_normalized(g.body)
    if g.backend == "closed":
        left, left_err = polar_integral(g, lambda u: (u @ theta) ** 2, 2.0, directions, seed)
        _, _, second = g.body.moments()
        right, right_err = float(theta @ second @ theta), 0.0
        tol = CLOSED_FORM_TOL
        passed = abs(left - 2 * right) <= tol + 3 * left_err
        err = left_err
    else:
        y = g.body.sample(samples, seed, TAG_PAIRS)
        z = g.body.sample(samples, seed, TAG_PAIRS + 100)
        lv = ((y - z) @ theta) ** 2
        left, left_err = float(lv.mean()), float(lv.std(ddof=1) / math.sqrt(samples))
        w = g.body.sample(samples, seed, TAG_RIGHT)
        rv = (w @ theta) ** 2
        right, right_err = float(rv.mean()), float(rv.std(ddof=1) / math.sqrt(samples))
        err = math.hypot(left_err, 2 * right_err)
        tol = 3.0
        passed = abs(left - 2 * right) <= 3 * err
    return VerificationReport("second_moment_identity", bool(passed),
                              {"left": left, "right": right, "ratio": left / right},
                              tol, err, {"theta": theta})


def level_set_radius(g: Covariogram, u, level: float, iterations: int = 80) -> np.ndarray:
    """Per direction, sup{r : g(r u) >= level * |K|} by bisection (g decreases along rays)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    lo = np.zeros(len(u))
    hi = g.support_radial(u)
    target = level * g.volume
    if level <= 0:
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        ok = g(mid[:, None] * u) >= target * (1 - 1e-15)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def simplex_levelset_check(g: Covariogram, levels=(0.25, 0.5, 0.75), directions: int = 64,
                           seed: int = 0, tol: float = 1e-9) -> VerificationReport:
    """Compare the radii of {g >= level |K|} with (1 - level^(1/n)) rho_{K-K}.

    The relation holds for every level exactly when K is a simplex; the
    report carries the largest relative mismatch.
    """
    if g.backend != "closed":
        raise ConfigError("level-set check requires a closed-form covariogram")
    u = sphere_directions(g.dim, directions, seed).vectors
    radii = g.support_radial(u)
    worst = 0.0
    per_level = {}
    for lv in levels:
        r = level_set_radius(g, u, lv)
        mism = float(np.max(np.abs(r - (1 - lv ** (1.0 / g.dim)) * radii) / radii))
        per_level[float(lv)] = mism
        worst = max(worst, mism)
    return VerificationReport("simplex_levelset", worst <= tol,
                              {"max_mismatch": worst, "per_level": per_level}, tol, 0.0)
