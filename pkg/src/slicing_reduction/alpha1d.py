"""One-dimensional alpha-concave functions and the normalized moment curve

    G_g(p) = ( binom(1/alpha + p, 1/alpha) * (1/g(0)) int_0^inf p t^(p-1) g(t) dt )^(1/p)

which is non-increasing in p, and constant exactly for the extremal profiles
g(t)/g(0) = (1 - t/M)^(1/alpha) on [0, M].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .numerics import gen_binom, integrate_ray_moment, stream, unit_ball_volume
from .report import VerificationReport

TAG_ALPHA = 51
TAG_SUITE = 52
DEFAULT_ALPHAS = (1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5)
DEFAULT_P_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass(frozen=True)
class AlphaConcave1D:
    """g(t) = height * phi(t)^(1/alpha) on [0, M], zero beyond.

    ``phi`` is piecewise linear and concave with phi(0) = 1, given by its
    values at ``knots`` (first knot 0, last knot M).
    """

    alpha: float
    knots: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    height: float = 1.0

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if len(k) < 2 or k[0] != 0.0 or np.any(np.diff(k) <= 0):
            raise DomainError("knots must start at 0 and increase strictly")
        if v[0] != 1.0 or np.any(v < 0):
            raise DomainError("profile must satisfy phi(0) = 1 and phi >= 0")
        slopes = np.diff(v) / np.diff(k)
        if np.any(np.diff(slopes) > 1e-12 * max(1.0, np.abs(slopes).max())):
            raise DomainError("profile is not concave")
        if not self.height > 0:
            raise DomainError("height must be positive")

    @property
    def support(self) -> float:
        return float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def profile(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.support)
        return np.where(inside, np.interp(t, self.knots, self.values), 0.0)

    def __call__(self, t) -> np.ndarray:
        return self.height * self.profile(t) ** (1.0 / self.alpha)

    def scaled(self, factor: float) -> AlphaConcave1D:
        """t -> g(t / factor)."""
        return AlphaConcave1D(self.alpha, self.knots * factor, self.values, self.height)

    def with_height(self, height: float) -> AlphaConcave1D:
        return AlphaConcave1D(self.alpha, self.knots, self.values, height)

    @classmethod
    def extremal(cls, alpha: float, support: float, height: float = 1.0) -> AlphaConcave1D:
        return cls(alpha, np.array([0.0, support]), np.array([1.0, 0.0]), height)

    @classmethod
    def from_slopes(cls, alpha: float, support: float, breaks: Sequence[float],
                    slopes: Sequence[float], height: float = 1.0) -> AlphaConcave1D:
        """Profile with the given slopes on the pieces cut at ``breaks``."""
        knots = np.concatenate([[0.0], np.asarray(breaks, dtype=float), [support]])
        if len(slopes) != len(knots) - 1:
            raise DomainError("need one slope per piece")
        values = np.concatenate([[1.0], 1.0 + np.cumsum(np.asarray(slopes) * np.diff(knots))])
        values[np.abs(values) < 1e-14] = 0.0
        return cls(alpha, knots, values, height)


def random_alpha_concave(seed: int, alpha: float, support: float = 1.0, knots: int = 4) -> AlphaConcave1D:
    """Seeded random alpha-concave profile with ``knots`` linear pieces.

    Break points are sorted uniforms in (0, M); slopes are negative uniforms
    sorted into non-increasing order (concavity) and rescaled so phi ends at
    either 0 (continuous case) or a random value in (0, 1) (a jump at M).
    """
    if knots < 2:
        raise DomainError("need at least 2 pieces")
    gen = stream(seed, TAG_ALPHA)
    breaks = np.sort(gen.uniform(0.0, support, knots - 1))
    # increasing magnitudes give non-increasing (concave) slopes
    slopes = -np.sort(gen.uniform(0.05, 1.0, knots))
    end = 0.0 if gen.random() < 0.5 else float(gen.uniform(0.0, 0.9))
    widths = np.diff(np.concatenate([[0.0], breaks, [support]]))
    drop = float(slopes @ widths)
    slopes = slopes * ((end - 1.0) / drop)
    return AlphaConcave1D.from_slopes(alpha, support, breaks, slopes)


def moment_curve(fn: Callable[[np.ndarray], np.ndarray], g0: float, support: float, alpha: float,
                 p: float, tol: float = 1e-12, breakpoints: Sequence[float] = ()) -> float:
    """G(p) for a generic ray function ``fn`` supported on [0, support]."""
    if not p > 0:
        raise DomainError("p must be positive")
    res = integrate_ray_moment(fn, p, support, tol=tol * 1e-2, rel_tol=tol * min(1.0, p) / 4,
                               breakpoints=breakpoints)
    b = 1.0 / alpha
    return (gen_binom(b + p, b) * res.value / g0) ** (1.0 / p)


def g_function(f: AlphaConcave1D, p: float, tol: float = 1e-12, alpha: float | None = None) -> float:
    """G_f(p); ``alpha`` overrides the declared concavity (negative controls)."""
    a = f.alpha if alpha is None else alpha
    return moment_curve(f, f.height, f.support, a, p, tol, f.knots[1:-1])


def monotonicity_suite(trials: int = 1000, p_grid: Sequence[float] = DEFAULT_P_GRID, seed: int = 0,
                       tol: float = 1e-7, alphas: Sequence[float] = DEFAULT_ALPHAS,
                       max_pieces: int = 8) -> VerificationReport:
    """Check G(p_{i+1}) <= G(p_i) + tol * max(1, G(p_i)) on seeded random profiles.

    Trial ``i`` uses alpha = alphas[i % len(alphas)]; its support length and
    piece count come from the stream keyed by ``(seed, i)``.
    """
    grid = [float(p) for p in p_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("p_grid must be increasing")
    violations = []
    worst = -math.inf
    worst_case = None
    envelope_excess = 0.0
    for i in range(trials):
        gen = stream(seed, TAG_SUITE, i)
        alpha = float(alphas[i % len(alphas)])
        support = float(gen.uniform(0.5, 3.0))
        pieces = int(gen.integers(2, max_pieces + 1))
        fseed = int(gen.integers(0, 2 ** 31))
        f = random_alpha_concave(fseed, alpha, support, pieces)
        vals = [g_function(f, p) for p in grid]
        envelope_excess = max(envelope_excess, max(vals) - support)
        for j in range(len(grid) - 1):
            excess = vals[j + 1] - vals[j]
            allowed = tol * max(1.0, vals[j])
            if excess - allowed > worst:
                worst = excess - allowed
                worst_case = {"trial": i, "seed": fseed, "alpha": alpha, "support": support,
                              "pieces": pieces, "p": (grid[j], grid[j + 1]),
                              "knots": f.knots.tolist(), "values": f.values.tolist()}
            if excess > allowed:
                violations.append((i, grid[j], grid[j + 1], excess))
    return VerificationReport(
        "lemma31_monotonicity", not violations,
        {"trials": trials, "violations": len(violations), "worst_excess_over_tol": worst,
         "envelope_excess": envelope_excess},
        tol, 0.0, {"worst_case": worst_case, "violation_list": violations[:20]})


def equality_detect(f: AlphaConcave1D, p: float, q: float, tol: float = 1e-10,
                    grid: int = 2001) -> VerificationReport:
    """Flag the extremal case G(p) = G(q) and measure the distance to (1 - t/M)^(1/alpha)."""
    if not 0 < p < q:
        raise DomainError("need 0 < p < q")
    gp = g_function(f, p, tol * 1e-2)
    gq = g_function(f, q, tol * 1e-2)
    gap = abs(gp - gq)
    distance = math.inf
    if gap <= tol:
        fit = gp
        t = np.unique(np.concatenate([np.linspace(0.0, max(fit, f.support), grid), f.knots]))
        h = np.clip(1.0 - t / fit, 0.0, None) ** (1.0 / f.alpha)
        distance = float(np.max(np.abs(f(t) / f.height - h)))
    flagged = distance <= 10 * tol
    return VerificationReport("lemma31_equality", flagged,
                              {"G_p": gp, "G_q": gq, "gap": gap, "sup_distance": distance,
                               "fitted_support": gp}, tol, 0.0)


class RadialProfile:
    """The rotation-invariant function x -> f(|x|) on R^n built from a 1-D profile.

    Implements the ray-source interface used by the Ball-body routines.
    """

    def __init__(self, f: AlphaConcave1D, dim: int):
        if np.any(np.diff(f.values) > 0):
            raise DomainError("radial embedding needs a non-increasing profile")
        self.f = f
        self.dim = dim
        self.alpha = f.alpha
        self.backend = "closed"
        self.value_at_origin = f.height
        self.support_volume = unit_ball_volume(dim) * f.support ** dim

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.f(np.linalg.norm(x, axis=1))

    def support_radial(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.full(len(u), self.f.support) / np.linalg.norm(u, axis=1)

    def ray_moments(self, u, orders):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = {}
        for k in orders:
            res = integrate_ray_moment(self.f, float(k), self.f.support, tol=1e-14, rel_tol=1e-14,
                                       breakpoints=self.f.knots[1:-1])
            out[float(k)] = (np.full(len(u), res.value), np.full(len(u), res.abs_error_estimate))
        return out

    def angular_breakpoints(self):
        return np.empty(0)

    def sample_support(self, count, seed):
        from .bodies import EuclideanBall
        return EuclideanBall(self.dim, self.f.support).sample(count, seed)
