"""Shared numerical plumbing: Gamma-based binomials, adaptive quadrature,
counter-based random streams and sphere directions."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

# Gauss-Kronrod 7/15 pair (QUADPACK qk15 constants); nodes listed outermost first.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, 7 from the outside).
for _i, _w in zip((1, 3, 5), _WG[:3]):
    _GAUSS_W[_i] = _w
    _GAUSS_W[14 - _i] = _w
_GAUSS_W[7] = _WG[3]

MAX_DEPTH = 60
SAMPLE_BLOCK = 1024


def log_gamma(x: float) -> float:
    """Natural logarithm of the Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def gen_binom(x: float, y: float) -> float:
    """Generalized binomial coefficient Gamma(1+x) / (Gamma(1+y) Gamma(1+x-y)).

    Restricted to ``x >= y > 0``.
    """
    if not (y > 0 and x >= y):
        raise DomainError(f"gen_binom requires x >= y > 0, got x={x!r}, y={y!r}")
    return math.exp(math.lgamma(1.0 + x) - math.lgamma(1.0 + y) - math.lgamma(1.0 + x - y))


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if self.abs_error_estimate < 0 or self.evaluations < 1:
            raise ValueError("invalid quadrature result")


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = np.asarray(f(c + h * _NODES), dtype=float)
    kron = h * float(_KRONROD_W @ y)
    gauss = h * float(_GAUSS_W @ y)
    return kron, abs(kron - gauss)


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    rel_tol: float = 0.0,
    max_intervals: int = 4000,
) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of a vectorized ``f``.

    Bisects the panel with the largest error estimate until the summed
    estimate drops below ``max(tol, rel_tol * |value|)``. Panels at depth
    ``MAX_DEPTH`` are frozen. A run that stops short of the tolerance returns
    ``converged=False`` together with its (honest) error estimate.
    """
    if not a < b:
        raise DomainError(f"integrate_adaptive requires a < b, got [{a}, {b}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    val, err = _gk15(f, a, b)
    evals = 15
    heap = [(-err, a, b, val, err, 0)]
    frozen_val = 0.0
    frozen_err = 0.0
    total_val, total_err = val, err
    while heap:
        if total_err <= max(tol, rel_tol * abs(total_val)):
            break
        if len(heap) > max_intervals:
            break
        _, lo, hi, v, e, depth = heapq.heappop(heap)
        if depth >= MAX_DEPTH:
            frozen_val += v
            frozen_err += e
            continue
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evals += 30
        heapq.heappush(heap, (-e1, lo, mid, v1, e1, depth + 1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2, depth + 1))
        # recompute sums rather than update incrementally to avoid drift
        total_val = frozen_val + math.fsum(item[3] for item in heap)
        total_err = frozen_err + math.fsum(item[4] for item in heap)
    converged = total_err <= max(tol, rel_tol * abs(total_val))
    return QuadratureResult(total_val, total_err, evals, converged)


def integrate_ray_moment(
    f: Callable[[np.ndarray], np.ndarray],
    p: float,
    upper: float,
    tol: float = 1e-12,
    rel_tol: float = 1e-13,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """Compute the ray moment  int_0^upper p t^(p-1) f(t) dt.

    The interval is split at ``breakpoints``; for ``p < 1`` the first panel is
    integrated in the variable ``s = t**p`` which removes the endpoint
    singularity of the weight.
    """
    if not p > 0:
        raise DomainError(f"moment exponent must be positive, got {p!r}")
    if upper <= 0:
        return QuadratureResult(0.0, 0.0, 1)
    cuts = sorted({float(c) for c in breakpoints if 0.0 < c < upper})
    edges = [0.0, *cuts, float(upper)]
    value, error, evals = 0.0, 0.0, 0
    converged = True
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        if k == 0 and p < 1.0:
            inv = 1.0 / p
            res = integrate_adaptive(lambda s: f(s ** inv), 0.0, hi ** p, tol, rel_tol)
        else:
            res = integrate_adaptive(lambda t: p * t ** (p - 1.0) * f(t), lo, hi, tol, rel_tol)
        value += res.value
        error += res.abs_error_estimate
        evals += res.evaluations
        converged = converged and res.converged
    return QuadratureResult(value, error, evals, converged)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, *key)``; same key, same numbers."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def blocked_draw(seed: int, tag: int, count: int, draw: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    """Concatenate ``draw(gen, m)`` over fixed-size blocks, block ``b`` keyed by
    ``(seed, tag, b)``. Sample ``i`` depends only on ``(seed, tag, i)``, so any
    block-aligned split of the work reproduces the same array."""
    parts = []
    for b in range(-(-count // SAMPLE_BLOCK)):
        m = min(SAMPLE_BLOCK, count - b * SAMPLE_BLOCK)
        parts.append(draw(stream(seed, tag, b), m))
    return np.concatenate(parts) if parts else np.empty((0,))


@dataclass(frozen=True)
class DirectionSet:
    dim: int
    vectors: np.ndarray = field(repr=False)
    mode: str
    seed: int | None = None

    def __len__(self):
        return len(self.vectors)


TAG_DIRECTIONS = 11


def sphere_directions(n: int, count: int, seed: int = 0) -> DirectionSet:
    """Unit directions in R^n.

    For n = 2 an equispaced angular grid starting at angle 0 (seed ignored);
    for n >= 3 normalized Gaussian vectors from the keyed Philox streams.
    """
    if n < 2 or count < 1:
        raise DomainError("sphere_directions needs n >= 2 and count >= 1")
    if n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        vecs = np.column_stack([np.cos(ang), np.sin(ang)])
        return DirectionSet(2, vecs, "grid", None)
    g = blocked_draw(seed, TAG_DIRECTIONS, count, lambda gen, m: gen.standard_normal((m, n)))
    vecs = g / np.linalg.norm(g, axis=1, keepdims=True)
    return DirectionSet(n, vecs, "uniform", seed)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def panel_rule(breakpoints, count: int, min_panels: int = 8, min_nodes: int = 4):
    """Planar angular rule: Gauss-Legendre on the arcs between ``breakpoints``.

    Returns unit directions (N, 2) and weights summing to 2*pi. Nodes are
    spread over the panels in proportion to arc length, ``count`` in total
    up to rounding. Without breakpoints the circle is cut into
    ``min_panels`` equal arcs.
    """
    cuts = np.sort(np.mod(np.asarray(breakpoints, dtype=float).ravel(), 2 * np.pi))
    if len(cuts):
        keep = np.concatenate([[True], np.diff(cuts) > 1e-12])
        cuts = cuts[keep]
        if len(cuts) > 1 and cuts[0] + 2 * np.pi - cuts[-1] <= 1e-12:
            cuts = cuts[:-1]
    if len(cuts) == 0:
        cuts = 2 * np.pi * np.arange(min_panels) / min_panels
    edges = np.concatenate([cuts, [cuts[0] + 2 * np.pi]])
    widths = np.diff(edges)
    if len(widths) < min_panels:
        # subdivide long arcs so every panel stays short
        pieces = np.maximum(1, np.round(widths / (2 * np.pi / min_panels))).astype(int)
        edges = np.concatenate([np.linspace(a, b, k + 1)[:-1] for a, b, k in zip(edges[:-1], edges[1:], pieces)]
                               + [[edges[-1]]])
        widths = np.diff(edges)
    angles, weights = [], []
    for a, w in zip(edges[:-1], widths):
        m = max(min_nodes, int(round(count * w / (2 * np.pi))))
        x, wx = np.polynomial.legendre.leggauss(m)
        angles.append(a + 0.5 * w * (x + 1))
        weights.append(0.5 * w * wx)
    ang = np.concatenate(angles)
    return np.column_stack([np.cos(ang), np.sin(ang)]), np.concatenate(weights)


def panel_rule_pair(breakpoints, count: int):
    """A panel rule and its half-resolution companion (half the nodes on
    every panel, minimum node count halved too), for error estimation."""
    return panel_rule(breakpoints, count), panel_rule(breakpoints, max(count // 2, 2), min_nodes=2)
