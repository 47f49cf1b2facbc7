"""Ball's bodies K_p(g) = {x : int_0^inf p t^(p-1) g(t x) dt >= g(0)}.

A *ray source* is anything exposing ``dim``, ``alpha``, ``value_at_origin``,
``support_radial(u)``, ``support_volume``, ``angular_breakpoints()`` and
``ray_moments(u, orders)``; :class:`~.covariogram.Covariogram` and
:class:`~.alpha1d.RadialProfile` both qualify. The radial function of K_p(g)
is the p-th root of the normalized ray moment of order p.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError
from .numerics import DirectionSet, gen_binom, panel_rule_pair, sphere_directions, stream, unit_ball_volume
from .report import VerificationReport

QUAD_TOL = 1e-9
INCLUSION_SLACK = 10 * QUAD_TOL
TAG_LEFT = 61
TAG_RIGHT = 62


@dataclass(frozen=True)
class BallBodyQuery:
    source: Any
    p: float
    alpha: float | None = None

    def __post_init__(self):
        if not self.p > 0:
            raise DomainError("exponent p must be positive")
        if not self.source.value_at_origin > 0:
            raise DomainError("g(0) must be positive")

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def concavity(self) -> float | None:
        return self.alpha if self.alpha is not None else getattr(self.source, "alpha", None)


def _moments(source, u, orders, workers: int = 1, chunk: int = 16):
    """ray_moments over many directions, optionally threaded; chunks are
    reassembled in input order so results do not depend on ``workers``."""
    u = np.atleast_2d(u)
    if workers <= 1 or len(u) <= chunk:
        return source.ray_moments(u, orders)
    pieces = [u[i:i + chunk] for i in range(0, len(u), chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: source.ray_moments(c, orders), pieces))
    return {float(k): (np.concatenate([p[float(k)][0] for p in parts]),
                       np.concatenate([p[float(k)][1] for p in parts])) for k in orders}


def radial_table(q: BallBodyQuery, u, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """rho_{K_p(g)} and its propagated error for each row of ``u``."""
    m, e = _moments(q.source, u, [q.p], workers)[float(q.p)]
    g0 = q.source.value_at_origin
    rho = (np.maximum(m, 0.0) / g0) ** (1.0 / q.p)
    err = np.where(m > 0, rho * e / (q.p * np.where(m > 0, m, 1.0)), 0.0)
    return rho, err


def ballbody_radial(q: BallBodyQuery, u, tol: float = QUAD_TOL) -> float:
    rho, err = radial_table(q, np.asarray(u, dtype=float)[None, :])
    if err[0] > tol * max(1.0, rho[0]):
        raise ArithmeticError(f"radial quadrature error {err[0]:.3g} above tolerance {tol:.3g}")
    return float(rho[0])


def _batched_volume(q: BallBodyQuery, u, weights, n):
    """Per-batch volumes for Monte Carlo sources (rows: batches)."""
    b = q.source.ray_moment_batches(u, [q.p])[float(q.p)]
    rho_n = (np.maximum(b, 0.0) / q.source.value_at_origin) ** (n / q.p)
    return rho_n @ weights / n


def ballbody_volume(q: BallBodyQuery, directions: int | DirectionSet = 256, seed: int = 0,
                    workers: int = 1) -> tuple[float, float]:
    """|K_p(g)| in polar coordinates with an error estimate.

    Planar: panelled Gauss-Legendre angular rule split at the source's ray
    kinks; the error is the change when the node count is halved plus the
    propagated quadrature error. n >= 3: uniform random directions, with the
    support body's radial function as control variate (its integral n|supp|
    is known exactly); the error is the delta-method standard error. Monte
    Carlo sources add the spread of batch-wise volumes.
    """
    n = q.dim
    src = q.source
    mc = getattr(src, "backend", "closed") == "mc"
    if n == 1:
        rho, err = radial_table(q, np.array([[1.0], [-1.0]]), workers)
        return float(rho.sum()), float(err.sum())
    if n == 2:
        count = directions if isinstance(directions, int) else len(directions)
        results = []
        for u, w in panel_rule_pair(src.angular_breakpoints(), count):
            rho, err = radial_table(q, u, workers)
            results.append((float(w @ rho ** 2) / 2, float(w @ (rho * err))))
            if not results[1:] and mc:
                batch_vols = _batched_volume(q, u, w, 2)
        (v, qerr), (v_half, _) = results
        total_err = abs(v - v_half) + qerr
        if mc:
            total_err = math.hypot(total_err, batch_vols.std(ddof=1) / math.sqrt(len(batch_vols)))
        return v, total_err
    dset = directions if isinstance(directions, DirectionSet) else sphere_directions(n, directions, seed)
    u = dset.vectors
    rho, err = radial_table(q, u, workers)
    f = rho ** n
    c = src.support_radial(u) ** n
    total = src.support_volume
    ratio = f.mean() / c.mean()
    se = total * math.sqrt(np.var(f - ratio * c, ddof=1) / len(f)) / c.mean()
    qerr = total * float(np.mean(n * rho ** (n - 1) * err)) / c.mean()
    v = total * ratio
    if mc:
        b = src.ray_moment_batches(u, [q.p])[float(q.p)]
        fb = (np.maximum(b, 0.0) / src.value_at_origin) ** (n / q.p)
        vb = total * fb.mean(axis=1) / c.mean()
        se = math.hypot(se, vb.std(ddof=1) / math.sqrt(len(vb)))
    return float(v), float(se + qerr)


def _random_directions(n, count, seed, tag):
    g = stream(seed, tag).standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def moment_transfer_check(q: BallBodyQuery, theta, moment: float, samples: int = 4000,
                          seed: int = 0, right_samples: int = 400_000) -> VerificationReport:
    """int_{K_{n+p}(g)} |<x,theta>|^p dx  versus  (1/g(0)) int |<x,theta>|^p g(x) dx.

    ``q.p`` must equal n + ``moment``. The left side is Monte Carlo over the
    Ball body in polar form (a random direction u, radius rho(u) U^(1/n));
    the right side integrates against g by uniform sampling of its support,
    or by difference pairs y - z for Monte Carlo covariograms.
    """
    n = q.dim
    if moment < 0 or abs(q.p - (n + moment)) > 1e-12:
        raise DomainError("query exponent must be n + moment with moment >= 0")
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    u = _random_directions(n, samples, seed, TAG_LEFT)
    uu = stream(seed, TAG_LEFT + 100).random(samples)
    rho, _ = radial_table(q, u)
    lv = unit_ball_volume(n) * rho ** n * np.abs(u @ theta) ** moment * rho ** moment * uu ** (moment / n)
    left, left_err = float(lv.mean()), float(lv.std(ddof=1) / math.sqrt(samples))
    src = q.source
    g0 = src.value_at_origin
    if getattr(src, "backend", "closed") == "mc":
        y = src.body.sample(right_samples, seed, TAG_RIGHT)
        z = src.body.sample(right_samples, seed, TAG_RIGHT + 100)
        rv = src.volume ** 2 * np.abs((y - z) @ theta) ** moment / g0
    else:
        x = src.sample_support(right_samples, seed)
        rv = src.support_volume * np.abs(x @ theta) ** moment * src(x) / g0
    right, right_err = float(rv.mean()), float(rv.std(ddof=1) / math.sqrt(right_samples))
    err = math.hypot(left_err, right_err)
    return VerificationReport("moment_transfer", abs(left - right) <= 3 * err,
                              {"left": left, "right": right, "moment": moment}, 3.0, err)


def _check_directions(n, directions, seed):
    if isinstance(directions, DirectionSet):
        return directions.vectors
    if isinstance(directions, np.ndarray):
        return directions
    if n == 1:
        return np.array([[1.0], [-1.0]])
    return sphere_directions(n, directions, seed).vectors


def radial_pair(source, p: float, q: float, u, workers: int = 1):
    """rho_p, rho_q and their errors on the same directions (one pass over the rays)."""
    mom = _moments(source, u, [p, q], workers)
    g0 = source.value_at_origin
    out = []
    for k in (p, q):
        m, e = mom[float(k)]
        rho = (m / g0) ** (1.0 / k)
        out.append((rho, rho * e / (k * m)))
    return out


def inclusion_logconcave_check(source, p: float, q: float, directions=64, seed: int = 0,
                               slack: float = INCLUSION_SLACK) -> VerificationReport:
    """Gamma(1+p)^(1/p)/Gamma(1+q)^(1/q) rho_q <= rho_p <= rho_q on every direction."""
    if not 0 < p <= q:
        raise DomainError("need 0 < p <= q")
    u = _check_directions(source.dim, directions, seed)
    (rp, ep), (rq, eq) = radial_pair(source, p, q, u)
    factor = math.exp(math.lgamma(1 + p) / p - math.lgamma(1 + q) / q)
    allowed = slack * np.maximum(1.0, rq) + 3 * (ep + eq)
    left_margin = rp - factor * rq
    right_margin = rq - rp
    ok = bool(np.all(left_margin >= -allowed) and np.all(right_margin >= -allowed))
    return VerificationReport(
        "inclusion_logconcave", ok,
        {"factor": factor, "worst_left_margin": float(left_margin.min()),
         "worst_right_margin": float(right_margin.min()), "directions": len(u)},
        slack, float(allowed.max()))


def scaled_radial(source, alpha: float, p: float, rho):
    b = 1.0 / alpha
    return gen_binom(b + p, b) ** (1.0 / p) * rho


def inclusion_alpha_check(source, alpha: float | None, p: float, q: float, directions=64,
                          seed: int = 0, slack: float = INCLUSION_SLACK) -> VerificationReport:
    """binom(1/a+q, 1/a)^(1/q) rho_q(u) <= binom(1/a+p, 1/a)^(1/p) rho_p(u) on every direction.

    ``max_abs_margin`` close to zero on all directions signals the equality case.
    """
    if not 0 < p <= q:
        raise DomainError("need 0 < p <= q")
    alpha = source.alpha if alpha is None else alpha
    u = _check_directions(source.dim, directions, seed)
    (rp, ep), (rq, eq) = radial_pair(source, p, q, u)
    sp = scaled_radial(source, alpha, p, rp)
    sq = scaled_radial(source, alpha, q, rq)
    margin = sp - sq
    allowed = slack * np.maximum(1.0, sp) + 3 * (sp * ep / rp + sq * eq / rq)
    worst = int(np.argmin(margin))
    return VerificationReport(
        "inclusion_alpha", bool(np.all(margin >= -allowed)),
        {"alpha": alpha, "p": p, "q": q, "worst_margin": float(margin[worst]),
         "worst_direction": u[worst], "max_abs_margin": float(np.abs(margin).max()),
         "max_margin": float(margin.max()), "directions": len(u)},
        slack, float(allowed.max()))


def equality_case_fingerprint(source, alpha: float | None = None, directions=64, points: int = 200,
                              seed: int = 0, tol: float = 1e-8) -> VerificationReport:
    """sup over rays of |g(t u)/g(0) - (1 - t/R(u))^(1/alpha)|, R the support radius."""
    alpha = source.alpha if alpha is None else alpha
    u = _check_directions(source.dim, directions, seed)
    radii = source.support_radial(u)
    s = np.linspace(0.0, 1.0, points)
    worst = 0.0
    g0 = source.value_at_origin
    for ui, r in zip(u, radii):
        x = np.multiply.outer(s * r, ui)
        diff = np.abs(source(x) / g0 - (1.0 - s) ** (1.0 / alpha))
        worst = max(worst, float(diff.max()))
    return VerificationReport("equality_fingerprint", worst <= tol,
                              {"fingerprint": worst, "alpha": alpha}, tol, 0.0)
