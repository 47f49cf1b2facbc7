"""Convex bodies: analytic cube / ball / regular simplex, V-polytopes and
affine images, with the geometric queries the rest of the package needs.

All point queries are vectorized over a leading axis. The central primitive
is :meth:`ConvexBody.exit_distance` -- how far one can travel from an inner
point along a direction before leaving the body. Radial functions, Minkowski
functionals and covariogram ray integrals are built on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import ConfigError, DomainError
from .numerics import blocked_draw, unit_ball_volume

TAG_BODY_SAMPLES = 21
MIN_MC_SAMPLES = 1000


class ConvexBody:
    dim: int

    # -- geometry ----------------------------------------------------------
    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        raise NotImplementedError

    def exit_distance(self, y, v) -> np.ndarray:
        """sup{t >= 0 : y + t v in K} for inner points ``y`` (N, n) and
        directions ``v`` of shape (n,) or (N, n)."""
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def moments(self) -> tuple[float, np.ndarray, np.ndarray]:
        """Exact (volume, barycenter, second moment about the barycenter)."""
        raise NotImplementedError

    def difference_body(self) -> ConvexBody:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _draw(self, gen: np.random.Generator, m: int) -> np.ndarray:
        return _rejection_draw(self, gen, m)

    def sample(self, count: int, seed: int, tag: int = TAG_BODY_SAMPLES) -> np.ndarray:
        """``count`` uniform points, reproducible from ``(seed, tag)``."""
        out = blocked_draw(seed, tag, count, self._draw)
        return out.reshape(count, self.dim)

    def is_centrally_symmetric(self) -> bool:
        return False

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError

    # -- derived -----------------------------------------------------------
    def radial(self, u) -> np.ndarray:
        """rho_K(u) = max{t > 0 : t u in K}; origin must be interior."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        self._require_origin_interior()
        r = self.exit_distance(np.zeros_like(u), u)
        return r if r.size > 1 else float(r[0])

    def minkowski(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        self._require_origin_interior()
        zero = ~np.any(x != 0.0, axis=1)
        safe = np.where(zero[:, None], 1.0, x)
        out = 1.0 / self.exit_distance(np.zeros_like(x), safe)
        out = np.where(zero, 0.0, out)
        return out if out.size > 1 else float(out[0])

    def _require_origin_interior(self):
        if not bool(self.contains(np.zeros((1, self.dim)), tol=-1e-12)[0]):
            raise DomainError("origin is not an interior point of the body")

    def _check_points(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise DomainError(f"point dimension {x.shape[1]} != body dimension {self.dim}")
        return x


def _rejection_draw(body: ConvexBody, gen: np.random.Generator, m: int) -> np.ndarray:
    lo, hi = body.bounding_box()
    out = []
    have = 0
    while have < m:
        batch = lo + (hi - lo) * gen.random((max(2 * (m - have), 64), body.dim))
        keep = batch[body.contains(batch)]
        out.append(keep)
        have += len(keep)
    return np.concatenate(out)[:m]


@dataclass(eq=False)
class Cube(ConvexBody):
    dim: int
    side: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or not self.side > 0:
            raise DomainError("cube needs dim >= 1 and side > 0")

    def contains(self, x, tol=1e-12):
        x = self._check_points(x)
        return np.all(np.abs(x) <= self.side / 2 + tol, axis=1)

    def exit_distance(self, y, v):
        y = np.atleast_2d(y)
        v = np.broadcast_to(np.asarray(v, dtype=float), y.shape)
        h = self.side / 2
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(v > 0, (h - y) / v, np.where(v < 0, (-h - y) / v, np.inf))
        return np.maximum(t.min(axis=1), 0.0)

    def volume(self):
        return self.side ** self.dim

    def moments(self):
        vol = self.volume()
        return vol, np.zeros(self.dim), vol * self.side ** 2 / 12.0 * np.eye(self.dim)

    def difference_body(self):
        return Cube(self.dim, 2 * self.side)

    def bounding_box(self):
        h = self.side / 2
        return -h * np.ones(self.dim), h * np.ones(self.dim)

    def _draw(self, gen, m):
        return (gen.random((m, self.dim)) - 0.5) * self.side

    def vertices(self):
        grid = np.array(np.meshgrid(*[[-0.5, 0.5]] * self.dim, indexing="ij"))
        return self.side * grid.reshape(self.dim, -1).T

    def is_centrally_symmetric(self):
        return True

    def to_json(self):
        return {"type": "cube", "dim": self.dim, "side": self.side}


@dataclass(eq=False)
class EuclideanBall(ConvexBody):
    dim: int
    radius: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or not self.radius > 0:
            raise DomainError("ball needs dim >= 1 and radius > 0")

    @classmethod
    def of_volume(cls, dim: int, vol: float = 1.0) -> EuclideanBall:
        return cls(dim, (vol / unit_ball_volume(dim)) ** (1.0 / dim))

    def contains(self, x, tol=1e-12):
        x = self._check_points(x)
        return np.linalg.norm(x, axis=1) <= self.radius + tol

    def exit_distance(self, y, v):
        y = np.atleast_2d(y)
        v = np.broadcast_to(np.asarray(v, dtype=float), y.shape)
        vv = np.einsum("ij,ij->i", v, v)
        yv = np.einsum("ij,ij->i", y, v)
        yy = np.einsum("ij,ij->i", y, y)
        disc = np.maximum(yv * yv - vv * (yy - self.radius ** 2), 0.0)
        return np.maximum((-yv + np.sqrt(disc)) / vv, 0.0)

    def volume(self):
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def moments(self):
        vol = self.volume()
        return vol, np.zeros(self.dim), vol * self.radius ** 2 / (self.dim + 2) * np.eye(self.dim)

    def difference_body(self):
        return EuclideanBall(self.dim, 2 * self.radius)

    def bounding_box(self):
        return -self.radius * np.ones(self.dim), self.radius * np.ones(self.dim)

    def _draw(self, gen, m):
        g = gen.standard_normal((m, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * (self.radius * gen.random(m) ** (1.0 / self.dim))[:, None]

    def is_centrally_symmetric(self):
        return True

    def to_json(self):
        return {"type": "ball", "dim": self.dim, "radius": self.radius}


class VPolytope(ConvexBody):
    """Convex hull of a finite point set spanning R^n (n >= 2).

    The facet description comes from qhull; facets are simplices (option
    ``Qt``) so the fan from the vertex centroid triangulates the polytope.
    """

    def __init__(self, vertices):
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise DomainError("vertex list must be a non-empty (m, n) array")
        self.dim = pts.shape[1]
        if self.dim < 2:
            raise DomainError("V-polytopes need dimension >= 2")
        if len(pts) <= self.dim or np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-10) < self.dim:
            raise DomainError("vertices do not affinely span R^n (degenerate polytope)")
        try:
            hull = ConvexHull(pts, qhull_options="Qt")
        except QhullError as exc:
            raise DomainError(f"degenerate polytope: {exc}") from exc
        self.vertices = pts[hull.vertices]
        self._A = hull.equations[:, :-1]
        self._b = hull.equations[:, -1]
        self._facets = hull.points[hull.simplices]
        self._volume = float(hull.volume)

    @property
    def facet_normals(self):
        return self._A

    @property
    def facet_offsets(self):
        return self._b

    def contains(self, x, tol=1e-12):
        x = self._check_points(x)
        return np.all(x @ self._A.T + self._b <= tol, axis=1)

    def exit_distance(self, y, v):
        y = np.atleast_2d(y)
        v = np.asarray(v, dtype=float)
        slack = -(y @ self._A.T + self._b)
        rate = v @ self._A.T
        if rate.ndim == 1:
            rate = np.broadcast_to(rate, slack.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(rate > 0, slack / rate, np.inf)
        return np.maximum(t.min(axis=1), 0.0)

    def volume(self):
        return self._volume

    def moments(self):
        n = self.dim
        apex = self.vertices.mean(axis=0)
        # each facet simplex plus the apex is one simplex of the fan
        simplices = np.concatenate(
            [self._facets, np.broadcast_to(apex, (len(self._facets), 1, n))], axis=1
        )
        edges = simplices[:, :-1, :] - apex[None, None, :]
        vols = np.abs(np.linalg.det(edges)) / math.factorial(n)
        sums = simplices.sum(axis=1)
        vol = vols.sum()
        first = (vols[:, None] * sums).sum(axis=0) / (n + 1)
        outer = np.einsum("skn,skm->snm", simplices, simplices) + np.einsum("sn,sm->snm", sums, sums)
        second = np.einsum("s,snm->nm", vols, outer) / ((n + 1) * (n + 2))
        bary = first / vol
        return vol, bary, second - vol * np.outer(bary, bary)

    def difference_body(self):
        v = self.vertices
        diffs = (v[:, None, :] - v[None, :, :]).reshape(-1, self.dim)
        return VPolytope(diffs)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def is_centrally_symmetric(self):
        # compare the vertex set with its reflection through the barycenter of vertices
        c = self.vertices.mean(axis=0)
        v = self.vertices - c
        d = np.linalg.norm(v[:, None, :] + v[None, :, :], axis=2)
        return bool(np.all(d.min(axis=1) < 1e-9 * max(1.0, np.abs(v).max())))

    def to_json(self):
        return {"type": "vpolytope", "dim": self.dim, "vertices": self.vertices.tolist()}


class RegularSimplex(VPolytope):
    """Regular simplex of volume 1 with barycenter at the origin.

    Vertices are equidistant from the origin; the first one lies on the
    positive first coordinate axis.
    """

    def __init__(self, dim: int):
        if dim < 2:
            raise DomainError("regular simplex needs dim >= 2")
        e = np.eye(dim + 1)
        centered = e - e.mean(axis=0)
        q, r = np.linalg.qr(centered[:dim].T)
        q = q * np.sign(np.diag(r))
        verts = centered @ q
        vol = abs(np.linalg.det(verts[1:] - verts[0])) / math.factorial(dim)
        super().__init__(verts * vol ** (-1.0 / dim))
        self._ordered = verts * vol ** (-1.0 / dim)

    def _draw(self, gen, m):
        w = gen.dirichlet(np.ones(self.dim + 1), size=m)
        return w @ self._ordered

    def to_json(self):
        return {"type": "simplex", "dim": self.dim}


class AffineImage(ConvexBody):
    """The body ``T K + shift``."""

    def __init__(self, base: ConvexBody, matrix, shift=None):
        self.base = base
        self.dim = base.dim
        self.matrix = np.asarray(matrix, dtype=float).reshape(self.dim, self.dim)
        self.shift = np.zeros(self.dim) if shift is None else np.asarray(shift, dtype=float)
        self.det = float(np.linalg.det(self.matrix))
        if abs(self.det) < 1e-14:
            raise DomainError("affine map is singular")
        self.inverse = np.linalg.inv(self.matrix)

    def _pull(self, x):
        return (x - self.shift) @ self.inverse.T

    def contains(self, x, tol=1e-12):
        x = self._check_points(x)
        return self.base.contains(self._pull(x), tol)

    def exit_distance(self, y, v):
        y = np.atleast_2d(y)
        return self.base.exit_distance(self._pull(y), np.asarray(v, dtype=float) @ self.inverse.T)

    def volume(self):
        return abs(self.det) * self.base.volume()

    def moments(self):
        vol, bary, second = self.base.moments()
        t = self.matrix
        return abs(self.det) * vol, t @ bary + self.shift, abs(self.det) * t @ second @ t.T

    def difference_body(self):
        return AffineImage(self.base.difference_body(), self.matrix)

    def bounding_box(self):
        corners = _box_corners(*self.base.bounding_box()) @ self.matrix.T + self.shift
        return corners.min(axis=0), corners.max(axis=0)

    def _draw(self, gen, m):
        return self.base._draw(gen, m) @ self.matrix.T + self.shift

    def is_centrally_symmetric(self):
        return self.base.is_centrally_symmetric()

    def to_json(self):
        return {"affine": {"matrix": self.matrix.tolist(), "shift": self.shift.tolist(),
                           "base": self.base.to_json()}}


def _box_corners(lo, hi):
    n = len(lo)
    grid = np.array(np.meshgrid(*[[0.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    return lo + grid * (hi - lo)


# -- free-function API -------------------------------------------------------

def membership(body: ConvexBody, x) -> bool:
    """Exact membership test for a single point.

    V-polytopes are decided by a linear feasibility problem over convex
    combination weights, independent of the facet description.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (body.dim,):
        raise DomainError(f"point dimension {x.shape} != body dimension {body.dim}")
    if isinstance(body, VPolytope):
        return _lp_hull_membership(body.vertices, x)
    if isinstance(body, AffineImage):
        return membership(body.base, body._pull(x[None, :])[0])
    return bool(body.contains(x[None, :])[0])


def _lp_hull_membership(vertices, x, tol=1e-10):
    m = len(vertices)
    a_eq = np.vstack([vertices.T, np.ones((1, m))])
    b_eq = np.concatenate([x, [1.0]])
    res = linprog(np.zeros(m), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
    if res.status != 0:
        return False
    return bool(np.abs(a_eq @ res.x - b_eq).max() <= tol * max(1.0, np.abs(x).max()))


def minkowski_functional(body: ConvexBody, x) -> float:
    return body.minkowski(x)


def radial(body: ConvexBody, u) -> float:
    return body.radial(u)


def volume(body: ConvexBody, method: str = "exact", samples: int = 200_000,
           seed: int = 0) -> tuple[float, float]:
    """Volume with an error estimate (zero for exact evaluation)."""
    if method == "exact":
        return body.volume(), 0.0
    if method != "mc":
        raise ConfigError(f"unknown volume method {method!r}")
    if samples < MIN_MC_SAMPLES:
        raise ConfigError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples")
    lo, hi = body.bounding_box()
    box = float(np.prod(hi - lo))
    pts = blocked_draw(seed, TAG_BODY_SAMPLES + 1, samples,
                       lambda g, m: lo + (hi - lo) * g.random((m, body.dim))).reshape(samples, body.dim)
    frac = body.contains(pts).mean()
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


def difference_body(body: ConvexBody) -> ConvexBody:
    return body.difference_body()


@dataclass
class IsotropyData:
    barycenter: np.ndarray
    second_moment: np.ndarray
    volume: float
    isotropic_constant: float
    method: str
    samples: int | None = None
    seed: int | None = None
    barycenter_error: np.ndarray | None = None
    second_moment_error: np.ndarray | None = None
    volume_error: float = 0.0
    constant_error: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)


def isotropic_constant_from_moments(vol: float, second: np.ndarray) -> float:
    """L_K from det(M)^(1/n) / |K|^((n+2)/n) = L_K^2 (affine invariant)."""
    n = second.shape[0]
    det = float(np.linalg.det(second))
    if not det > 0:
        raise DomainError("second-moment matrix is not positive definite")
    return math.sqrt(det ** (1.0 / n) / vol ** ((n + 2.0) / n))


def isotropy_data(body: ConvexBody, method: str = "exact", samples: int = 200_000,
                  seed: int = 0, batches: int = 20) -> IsotropyData:
    """Barycenter, second moments and isotropic constant.

    ``exact`` uses closed forms (cube, ball) and fan triangulation (polytopes);
    ``mc`` samples uniformly inside the body, estimating the volume from the
    acceptance rate of the bounding box, with batch-means errors.
    """
    if method == "exact":
        vol, bary, second = body.moments()
        return IsotropyData(bary, second, vol, isotropic_constant_from_moments(vol, second), "exact")
    if method != "mc":
        raise ConfigError(f"unknown isotropy method {method!r}")
    if samples < MIN_MC_SAMPLES:
        raise ConfigError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples")
    vol, vol_err = volume(body, "mc", samples, seed)
    pts = body.sample(samples, seed)
    bary = pts.mean(axis=0)
    centered = pts - bary
    cov = centered.T @ centered / samples
    second = vol * cov
    chunks = np.array_split(np.arange(samples), batches)
    per_batch = []
    for idx in chunks:
        c = pts[idx] - pts[idx].mean(axis=0)
        per_batch.append(vol * c.T @ c / len(idx))
    per_batch = np.array(per_batch)
    second_err = per_batch.std(axis=0, ddof=1) / math.sqrt(batches)
    bary_err = pts.std(axis=0, ddof=1) / math.sqrt(samples)
    n = body.dim
    # L^2 = det(M)^(1/n) / |K|^((n+2)/n) = det(cov)^(1/n) / |K|^(2/n)
    L = math.sqrt(np.linalg.det(cov) ** (1.0 / n) / vol ** (2.0 / n))
    consts = [math.sqrt(np.linalg.det(b / vol) ** (1.0 / n) / vol ** (2.0 / n)) for b in per_batch]
    L_err = math.hypot(float(np.std(consts, ddof=1) / math.sqrt(batches)), L * vol_err / (n * vol))
    return IsotropyData(bary, second, vol, L, "mc", samples, seed, bary_err, second_err, vol_err, L_err)


def isotropic_normalize(body: ConvexBody, data: IsotropyData | None = None) -> AffineImage:
    """Affine image ``a + T K`` of volume 1, barycenter 0 and scalar second moments."""
    if data is None:
        data = isotropy_data(body)
    cov = data.second_moment / data.volume
    w, q = np.linalg.eigh(cov)
    if not np.all(w > 0):
        raise DomainError("singular moment matrix")
    inv_sqrt = (q / np.sqrt(w)) @ q.T
    scale = (math.sqrt(float(np.prod(w))) / data.volume) ** (1.0 / body.dim)
    t = scale * inv_sqrt
    return AffineImage(body, t, -t @ data.barycenter)


# -- JSON --------------------------------------------------------------------

def body_from_json(data: dict[str, Any]) -> ConvexBody:
    if "affine" in data:
        aff = data["affine"]
        unknown = set(aff) - {"matrix", "shift", "base"}
        if unknown:
            raise ConfigError(f"unknown affine fields {sorted(unknown)}")
        return AffineImage(body_from_json(aff["base"]), aff["matrix"], aff.get("shift"))
    allowed = {"type", "dim", "side", "radius", "vertices"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown body fields {sorted(unknown)}")
    kind = data.get("type")
    if kind == "cube":
        return Cube(int(data["dim"]), float(data.get("side", 1.0)))
    if kind == "ball":
        if "radius" in data:
            return EuclideanBall(int(data["dim"]), float(data["radius"]))
        return EuclideanBall.of_volume(int(data["dim"]))
    if kind == "simplex":
        return RegularSimplex(int(data["dim"]))
    if kind == "vpolytope":
        body = VPolytope(data["vertices"])
        if "dim" in data and int(data["dim"]) != body.dim:
            raise ConfigError("declared dim does not match vertex coordinates")
        return body
    raise ConfigError(f"unknown body type {kind!r}")


def random_vpolytope(dim: int, seed: int, points: int | None = None) -> VPolytope:
    """Hull of 6-10 seeded uniform points in [-1, 1]^dim; degenerate draws are redrawn."""
    from .numerics import stream

    attempt = 0
    while True:
        gen = stream(seed, 31, attempt)
        m = points if points is not None else int(gen.integers(6, 11))
        try:
            return VPolytope(gen.uniform(-1.0, 1.0, size=(m, dim)))
        except DomainError:
            attempt += 1
