"""End-to-end check of L_K <= D_n L_{K_{n+2}(g_K)} and of the volume chain behind it."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .ballbodies import BallBodyQuery, ballbody_volume, radial_table
from .bodies import ConvexBody, isotropic_constant_from_moments, isotropic_normalize, isotropy_data
from .combinatorics import dn, dn_le_sqrt2_exact, limit_quantity, volume_bound
from .covariogram import Covariogram
from .errors import ConfigError
from .numerics import panel_rule, sphere_directions
from .report import VerificationReport

CSV_COLUMNS = ("body", "n", "L_K", "V", "L_ball", "D_n", "ratio", "pass", "equality")


class StageError(RuntimeError):
    """A pipeline step failed; ``stage`` names the step."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class Theorem1Config:
    directions: int | None = None  # 256 for n = 2, 4096 otherwise
    seed: int = 0
    backend: str = "auto"
    samples: int = 200_000
    isotropy: str = "exact"
    normalize: bool = True
    equality_tol: float = 1e-4
    mc_sigmas: float = 3.0
    pass_tol: float = 1e-9
    workers: int = 1

    def resolved_directions(self, n: int) -> int:
        if self.directions is not None:
            return self.directions
        return 256 if n == 2 else 4096


@dataclass
class Theorem1Report:
    body: str
    n: int
    L_K: float
    L_K_error: float
    V: float
    V_error: float
    L_ball: float
    L_ball_error: float
    D_n: float
    ratio: float
    ratio_error: float
    passed: bool
    equality: bool
    backend: str
    seed: int
    tolerances: dict[str, float] = field(default_factory=dict)

    def csv_row(self) -> list[Any]:
        return [self.body, self.n, self.L_K, self.V, self.L_ball, self.D_n, self.ratio,
                self.passed, self.equality]

    def to_dict(self) -> dict[str, Any]:
        return {k: (bool(v) if isinstance(v, np.bool_) else v) for k, v in asdict(self).items()}


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StageError):
        raise
    except Exception as exc:  # tag and re-raise
        raise StageError(name, exc) from exc


def _prepare(body: ConvexBody, config: Theorem1Config):
    data = _stage("isotropy", isotropy_data, body, method=config.isotropy,
                  samples=config.samples, seed=config.seed)
    if config.normalize:
        body = _stage("normalize", isotropic_normalize, body, data)
    elif abs(data.volume - 1.0) > 1e-9 or np.abs(data.barycenter).max() > 1e-9:
        raise ConfigError("body is not normalized; enable normalize")
    return body, data


def theorem1_verify(body: ConvexBody, config: Theorem1Config = Theorem1Config(),
                    name: str | None = None) -> Theorem1Report:
    n = body.dim
    normalized, data = _prepare(body, config)
    g = _stage("covariogram", Covariogram, normalized, backend=config.backend,
               samples=config.samples, seed=config.seed)
    q = BallBodyQuery(g, n + 2)
    v, v_err = _stage("ballbody_volume", ballbody_volume, q, config.resolved_directions(n),
                      config.seed, config.workers)
    d = float(dn(n).value)
    lk, lk_err = data.isotropic_constant, data.constant_error
    expo = (n + 2) / (2 * n)
    l_ball = math.sqrt(2.0) * lk / v ** expo
    l_ball_err = l_ball * math.hypot(lk_err / lk, expo * v_err / v)
    ratio = lk / (d * l_ball)
    # ratio = V^((n+2)/2n) / (sqrt2 D_n); L_K cancels
    ratio_err = ratio * expo * v_err / v
    mc = g.backend == "mc" or config.isotropy == "mc"
    eq_tol = config.mc_sigmas * ratio_err if mc else config.equality_tol
    pass_tol = config.pass_tol + config.mc_sigmas * ratio_err
    return Theorem1Report(
        body=name or body_label(body), n=n, L_K=lk, L_K_error=lk_err, V=v, V_error=v_err,
        L_ball=l_ball, L_ball_error=l_ball_err, D_n=d, ratio=ratio, ratio_error=ratio_err,
        passed=ratio <= 1.0 + pass_tol, equality=abs(ratio - 1.0) <= eq_tol,
        backend=g.backend, seed=config.seed,
        tolerances={"equality": eq_tol, "pass": pass_tol})


def body_label(body: ConvexBody) -> str:
    return body.to_json().get("type", type(body).__name__.lower())


def volume_bound_check(body: ConvexBody, directions: int | None = None, seed: int = 0,
                       backend: str = "auto", equality_tol: float = 1e-8) -> VerificationReport:
    """|K_{n+2}(g_K)| against C(2n,n)/C(2n+2,n)^(n/(n+2)) for a volume-one body."""
    n = body.dim
    if abs(body.volume() - 1.0) > 1e-9:
        raise ConfigError("volume_bound_check needs |K| = 1")
    g = Covariogram(body, backend=backend, seed=seed)
    v, err = ballbody_volume(BallBodyQuery(g, n + 2), directions or (256 if n == 2 else 4096), seed)
    bound = volume_bound(n)
    slack = max(3 * err, 1e-12)
    return VerificationReport(
        "volume_bound", v <= bound + slack,
        {"volume": v, "bound": bound, "gap": bound - v,
         "equality": abs(v - bound) <= max(equality_tol, slack)}, slack, err)


def polar_moments(rho: np.ndarray, u: np.ndarray, weights: np.ndarray, n: int):
    """Volume, barycenter and centered second moment of a star body from radial values.

    ``weights`` integrate over the sphere; exact up to the angular rule.
    """
    vol = float(weights @ rho ** n) / n
    bary = (weights * rho ** (n + 1)) @ u / (n + 1) / vol
    second = (u.T * weights * rho ** (n + 2)) @ u / (n + 2)
    return vol, bary, second - vol * np.outer(bary, bary)


def symmetric_reduction_report(body: ConvexBody, directions: int | None = None, seed: int = 0,
                               backend: str = "auto", tol: float = 1e-9) -> VerificationReport:
    """Build T = |K_{n+2}|^(-1/n) K_{n+2}(g_K) and check it is symmetric with volume one.

    Also compares L_T from the moment identity with L_T from the polar moments of T,
    and packages the reduction constant C = D_n.
    """
    n = body.dim
    if abs(body.volume() - 1.0) > 1e-9:
        raise ConfigError("symmetric_reduction_report needs |K| = 1")
    g = Covariogram(body, backend=backend, seed=seed)
    q = BallBodyQuery(g, n + 2)
    count = directions or (256 if n == 2 else 4096)
    v, v_err = ballbody_volume(q, count, seed)
    scale = v ** (-1.0 / n)
    if n == 2:
        u, w = panel_rule(g.angular_breakpoints(), count)
    else:
        u = sphere_directions(n, count, seed).vectors
        w = np.full(len(u), n * g.support_volume / float(np.sum(g.support_radial(u) ** n)))
        # weights reproduce n|K-K| on the support body (ratio estimator)
    rho, rerr = radial_table(q, u)
    rho_neg, _ = radial_table(q, -u)
    rho_t, rho_t_neg = scale * rho, scale * rho_neg
    asym = float(np.max(np.abs(rho_t - rho_t_neg)))
    sym_tol = tol + 3 * scale * float(rerr.max())
    vol_t, bary, cov = polar_moments(rho_t, u, w, n)
    l_direct = isotropic_constant_from_moments(vol_t, cov)
    base_moments = body.moments()
    l_k = isotropic_constant_from_moments(base_moments[0], base_moments[2])
    l_identity = math.sqrt(2.0) * l_k / v ** ((n + 2) / (2 * n))
    vol_err = n * v_err / v
    ok = asym <= sym_tol and abs(vol_t - 1.0) <= max(3 * vol_err, 1e-12) if n == 2 else asym <= sym_tol
    d = float(dn(n).value)
    return VerificationReport(
        "symmetric_reduction", bool(ok),
        {"volume_T": vol_t, "asymmetry": asym, "L_T_identity": l_identity, "L_T_direct": l_direct,
         "reduction_constant": d, "L_K": l_k, "L_K_over_L_T": l_k / l_identity},
        sym_tol, vol_err,
        {"directions": u, "radial_T": rho_t})


def dn_limit_scan(n_list: Sequence[int]) -> VerificationReport:
    if not n_list:
        raise ConfigError("n_list must be nonempty")
    rows = []
    for n in n_list:
        d = dn(n)
        value = float(d.value)
        rows.append({"n": n, "D_n": value, "gap": math.sqrt(2.0) - value,
                     "limit_quantity": float(limit_quantity(n)), "certificate": dn_le_sqrt2_exact(n)})
    ok = all(r["certificate"] for r in rows)
    return VerificationReport("dn_limit_scan", ok, {"rows": rows, "count": len(rows)}, 0.0, 0.0)
