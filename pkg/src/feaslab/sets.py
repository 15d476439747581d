"""Closed convex sets with metric projections, distances and membership.

Every set variant is closed and convex by construction.  Halfspace,
hyperplane, ball, box, affine flat and circular cone project in closed
form; polytopes and translated finitely-generated cones go through an
active-set nearest-point solver.  ``dykstra_distance`` estimates the
distance to the intersection of a family via Dykstra's corrected cyclic
projections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSet, SolverFailure

SCHEMA_VERSION = 1


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Validate and convert to a 1-D float64 vector with finite entries."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise InvalidSet(f"point must be a 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidSet("point has non-finite coordinates")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {p.size}")
    return p


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TolerancePolicy:
    """Numerical tolerances shared by the projection operations.

    proj_tol        stopping tolerance of iterative nearest-point solvers
    geom_tol        membership slack for containment and branch predicates
    max_inner_iters iteration cap of the inner solvers
    """

    proj_tol: float = 1e-10
    geom_tol: float = 1e-8
    max_inner_iters: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.proj_tol <= self.geom_tol):
            raise InvalidSet("need 0 < proj_tol <= geom_tol")
        if self.max_inner_iters < 1:
            raise InvalidSet("max_inner_iters must be >= 1")


DEFAULT_TOL = TolerancePolicy()


class ConvexSet:
    """Base class for the projectable set variants."""

    dim: int

    def _project(self, x: np.ndarray, tol: TolerancePolicy) -> np.ndarray:
        raise NotImplementedError

    def _check_dim(self, x: np.ndarray):
        if x.size != self.dim:
            raise DimensionMismatch(
                f"{type(self).__name__} lives in R^{self.dim}, point in R^{x.size}"
            )


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """{x : <normal, x> <= offset}"""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_point(self.normal)
        if np.linalg.norm(n) == 0.0:
            raise InvalidSet("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", _frozen(n))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    def _project(self, x, tol):
        excess = float(self.normal @ x) - self.offset
        if excess <= 0.0:
            return x.copy()
        return x - (excess / float(self.normal @ self.normal)) * self.normal


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """{x : <normal, x> = offset}"""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_point(self.normal)
        if np.linalg.norm(n) == 0.0:
            raise InvalidSet("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", _frozen(n))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    def _project(self, x, tol):
        gap = float(self.normal @ x) - self.offset
        return x - (gap / float(self.normal @ self.normal)) * self.normal


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_point(self.center)
        if self.radius < 0.0:
            raise InvalidSet("ball radius must be >= 0")
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    def _project(self, x, tol):
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        # radius 0 degenerates to the singleton {center}
        if r == 0.0:
            return self.center.copy()
        return self.center + (self.radius / r) * d


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lower)
        hi = as_point(self.upper, dim=lo.size)
        if np.any(lo > hi):
            raise InvalidSet("box needs lower <= upper componentwise")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def dim(self):
        return self.lower.size

    def _project(self, x, tol):
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class AffineFlat(ConvexSet):
    """base + span(basis).  An empty basis gives the singleton {base}."""

    base: np.ndarray
    basis: np.ndarray  # shape (k, dim); rows may be linearly dependent

    def __post_init__(self):
        b = as_point(self.base)
        mat = np.asarray(self.basis, dtype=float)
        if mat.size == 0:
            mat = np.zeros((0, b.size))
        if mat.ndim != 2 or mat.shape[1] != b.size:
            raise DimensionMismatch("basis rows must match the base dimension")
        if not np.all(np.isfinite(mat)):
            raise InvalidSet("basis has non-finite entries")
        object.__setattr__(self, "base", _frozen(b))
        object.__setattr__(self, "basis", _frozen(mat))
        # orthonormal spanning set, rank-revealing
        if mat.shape[0] == 0:
            q = np.zeros((0, b.size))
        else:
            u, s, vt = np.linalg.svd(mat, full_matrices=False)
            keep = s > 1e-12 * max(1.0, s[0] if s.size else 0.0)
            q = vt[keep]
        object.__setattr__(self, "_onb", _frozen(q))

    @property
    def dim(self):
        return self.base.size

    def _project(self, x, tol):
        d = x - self.base
        return self.base + self._onb.T @ (self._onb @ d)


@dataclass(frozen=True, eq=False)
class CircularCone(ConvexSet):
    """{apex + v : angle(v, axis) <= half_angle}, half_angle in (0, pi/2)."""

    apex: np.ndarray
    axis: np.ndarray
    half_angle: float

    def __post_init__(self):
        a = as_point(self.apex)
        ax = as_point(self.axis, dim=a.size)
        nrm = np.linalg.norm(ax)
        if abs(nrm - 1.0) > 1e-12:
            raise InvalidSet(f"cone axis must have unit norm, got {nrm!r}")
        if not (0.0 < self.half_angle < np.pi / 2):
            raise InvalidSet("half_angle must lie in (0, pi/2)")
        object.__setattr__(self, "apex", _frozen(a))
        object.__setattr__(self, "axis", _frozen(ax))
        object.__setattr__(self, "half_angle", float(self.half_angle))

    @property
    def dim(self):
        return self.apex.size

    def _project(self, x, tol):
        # three-branch second-order-cone projection; the slack keeps the
        # branch choice deterministic for boundary points and only needs
        # to cover roundoff, which scales with the point's magnitude
        alpha = np.tan(self.half_angle)
        v = x - self.apex
        t = float(self.axis @ v)
        u = v - t * self.axis
        rho = float(np.linalg.norm(u))
        slack = tol.geom_tol + 16 * np.finfo(float).eps * float(np.linalg.norm(v))
        if rho <= alpha * t + slack:
            return x.copy()
        if alpha * rho <= -t + slack:
            return self.apex.copy()
        beta = (t + alpha * rho) / (1.0 + alpha * alpha)
        return self.apex + beta * self.axis + (beta * alpha / rho) * u


@dataclass(frozen=True, eq=False)
class Polytope(ConvexSet):
    """Convex hull of finitely many vertices (at least one)."""

    vertices: np.ndarray  # shape (m, dim)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1:
            raise InvalidSet("polytope needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise InvalidSet("polytope vertices must be finite")
        object.__setattr__(self, "vertices", _frozen(v))

    @property
    def dim(self):
        return self.vertices.shape[1]

    def _project(self, x, tol):
        if self.vertices.shape[0] == 1:
            return self.vertices[0].copy()
        y, _ = _min_norm_point(self.vertices - x, tol)
        return x + y


@dataclass(frozen=True, eq=False)
class TranslatedCone(ConvexSet):
    """vertex + cone{generators}.  No generators gives the singleton {vertex}."""

    vertex: np.ndarray
    generators: np.ndarray  # shape (m, dim)

    def __post_init__(self):
        v = as_point(self.vertex)
        g = np.asarray(self.generators, dtype=float)
        if g.size == 0:
            g = np.zeros((0, v.size))
        if g.ndim == 1:
            g = g[None, :]
        if g.shape[1] != v.size:
            raise DimensionMismatch("generators must match the vertex dimension")
        if not np.all(np.isfinite(g)):
            raise InvalidSet("generators must be finite")
        object.__setattr__(self, "vertex", _frozen(v))
        object.__setattr__(self, "generators", _frozen(g))

    @property
    def dim(self):
        return self.vertex.size

    def _project(self, x, tol):
        if self.generators.shape[0] == 0:
            return self.vertex.copy()
        b = x - self.vertex
        w = _nnls(self.generators.T, b, tol)
        return self.vertex + self.generators.T @ w


SET_VARIANTS = (
    Halfspace,
    Hyperplane,
    Ball,
    Box,
    AffineFlat,
    CircularCone,
    Polytope,
    TranslatedCone,
)


def _nnls(A: np.ndarray, b: np.ndarray, tol: TolerancePolicy) -> np.ndarray:
    """Lawson-Hanson active-set solver for min ||A w - b||, w >= 0.

    A is (n, m).  The passive-set least-squares subproblems are solved
    exactly, so the result is accurate to roundoff at termination.
    """
    m = A.shape[1]
    passive = np.zeros(m, dtype=bool)
    w = np.zeros(m)
    resid = b.copy()
    scale = 1.0 + float(np.linalg.norm(A, ord=np.inf)) * (1.0 + np.linalg.norm(b))
    grad_stop = max(tol.proj_tol * scale, 1e-14 * scale)

    for _ in range(max(tol.max_inner_iters, 3 * m)):
        grad = A.T @ resid
        grad[passive] = -np.inf
        j = int(np.argmax(grad))
        if grad[j] <= grad_stop:
            return w
        passive[j] = True
        while True:
            idx = np.flatnonzero(passive)
            s, *_ = np.linalg.lstsq(A[:, idx], b, rcond=None)
            if np.all(s > 0.0):
                w[:] = 0.0
                w[idx] = s
                break
            bad = s <= 0.0
            wp = w[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(wp - s > 0, wp / (wp - s), np.inf)
            alpha = float(np.min(ratios[bad]))
            w[idx] = wp + alpha * (s - wp)
            w[w < 1e-15] = 0.0
            passive = w > 0.0
            if not np.any(passive):
                return w
        resid = b - A @ w
    raise SolverFailure(
        "nonnegative least-squares hit the iteration cap",
        achieved=float(np.linalg.norm(resid)),
    )


def _min_norm_point(points: np.ndarray, tol: TolerancePolicy):
    """Wolfe's active-set method for the minimum-norm point of a hull.

    points is an (m, n) array; returns (y, weights) with y the nearest
    point of conv(points) to the origin and weights its barycentric
    coordinates (full length m).
    """
    m = points.shape[0]
    scale = 1.0 + float(np.max(np.einsum("ij,ij->i", points, points)))
    eps = 1e-14 * scale
    stop = max(tol.proj_tol * scale, 1e-15 * scale)

    active = [int(np.argmin(np.einsum("ij,ij->i", points, points)))]
    w = np.array([1.0])
    y = points[active[0]].copy()

    for _ in range(tol.max_inner_iters):
        scores = points @ y
        j = int(np.argmin(scores))
        gap = float(y @ y) - float(scores[j])
        if gap <= stop:
            break
        if j in active:
            break  # numerically stalled; y is optimal to working precision
        active.append(j)
        w = np.append(w, 0.0)
        # minor cycle: pull y to the affine minimizer over the active set,
        # dropping vertices whose weight would turn negative
        while True:
            q = points[active]
            u = _affine_min_weights(q)
            if np.all(u > eps):
                w = u
                y = q.T @ u
                break
            neg = u <= eps
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(w - u > 0, w / (w - u), np.inf)
            theta = min(1.0, float(np.min(ratios[neg])))
            w = (1.0 - theta) * w + theta * u
            w[w < eps] = 0.0
            keep = w > 0.0
            if not np.any(keep):
                keep[int(np.argmax(u))] = True
                w[keep] = 1.0
            active = [a for a, k in zip(active, keep) if k]
            w = w[keep]
            w = w / w.sum()
            if len(active) == 1:
                y = points[active[0]].copy()
                w = np.array([1.0])
                break
    else:
        raise SolverFailure(
            "min-norm point solver hit the iteration cap", achieved=gap
        )

    full = np.zeros(m)
    full[active] = w
    return y, full


def _affine_min_weights(q: np.ndarray) -> np.ndarray:
    """Barycentric weights of the norm minimizer over the affine hull of q."""
    k = q.shape[0]
    aug = np.zeros((k + 1, k + 1))
    aug[:k, :k] = q @ q.T
    aug[:k, k] = 1.0
    aug[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    return sol[:k]


def project(s: ConvexSet, x, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Metric projection of x onto s."""
    p = as_point(x)
    s._check_dim(p)
    return s._project(p, tol)


def distance(s: ConvexSet, x, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    p = as_point(x)
    s._check_dim(p)
    return float(np.linalg.norm(p - s._project(p, tol)))


def contains(s: ConvexSet, x, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return distance(s, x, tol) <= tol.geom_tol


def kolmogorov_margin(
    s: ConvexSet, x, probe, tol: TolerancePolicy = DEFAULT_TOL
) -> float:
    """<x - P(x), P(x) - probe> for a probe inside s.

    Nonnegative (up to roundoff) for every probe in the set; this is the
    variational characterization of the metric projection.
    """
    p = as_point(x)
    q = as_point(probe, dim=p.size)
    s._check_dim(p)
    if not contains(s, q, tol):
        raise ValueError("probe point is not in the set")
    px = s._project(p, tol)
    return float((p - px) @ (px - q))


@dataclass(frozen=True, eq=False)
class Family:
    """Ordered family of closed convex sets, optionally with an exact
    intersection-distance oracle used by diagnostics."""

    sets: tuple
    intersection_oracle: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        sets = tuple(self.sets)
        if len(sets) < 1:
            raise InvalidSet("family needs at least one set")
        dim = sets[0].dim
        for s in sets:
            if not isinstance(s, ConvexSet):
                raise InvalidSet(f"not a convex set variant: {s!r}")
            if s.dim != dim:
                raise DimensionMismatch("family members live in different dimensions")
        object.__setattr__(self, "sets", sets)

    @property
    def dim(self):
        return self.sets[0].dim

    def per_set_distances(self, x, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
        p = as_point(x, dim=self.dim)
        return np.array([distance(s, p, tol) for s in self.sets])


def dykstra_project(
    family: Family, x, tol: TolerancePolicy = DEFAULT_TOL
) -> tuple[np.ndarray, dict]:
    """Approximate projection of x onto the intersection of the family.

    Runs Dykstra's cyclic corrected projections until a full cycle moves
    the iterate less than proj_tol.  Unlike plain alternating projections
    this converges to the nearest point of the intersection, so the
    returned displacement is a distance estimate.  Raises SolverFailure
    (reporting the last cycle displacement) if the cycle cap is reached.
    """
    p = as_point(x, dim=family.dim)
    y = p.copy()
    increments = [np.zeros(family.dim) for _ in family.sets]
    displacement = np.inf
    prev = np.inf
    quiet = 0
    for cycle in range(1, tol.max_inner_iters + 1):
        start = y.copy()
        for i, s in enumerate(family.sets):
            shifted = y + increments[i]
            ynew = s._project(shifted, tol)
            increments[i] = shifted - ynew
            y = ynew
        displacement = float(np.linalg.norm(y - start))
        # A small single-cycle move is not enough: linearly converging
        # runs still have a geometric tail of total length disp*q/(1-q),
        # and polyhedral families can stall for one cycle and then move
        # again.  Estimate the rate from successive displacements and
        # stop only after several consecutive cycles whose extrapolated
        # remaining travel is below proj_tol.
        if displacement <= tol.proj_tol:
            floor = 64 * np.finfo(float).eps * (1.0 + float(np.linalg.norm(y)))
            if displacement <= floor:
                tail = 0.0
            elif prev > 0 and displacement < prev:
                rate = displacement / prev
                tail = displacement * rate / (1.0 - rate)
            else:
                tail = np.inf
            quiet = quiet + 1 if tail <= tol.proj_tol else 0
        else:
            quiet = 0
        prev = displacement
        if quiet >= 3:
            return y, {"cycles": cycle, "displacement": displacement}
    raise SolverFailure(
        f"Dykstra did not converge in {tol.max_inner_iters} cycles "
        f"(last cycle moved {displacement:.3e})",
        achieved=displacement,
    )


def dykstra_distance(family: Family, x, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    p = as_point(x, dim=family.dim)
    y, _ = dykstra_project(family, p, tol)
    return float(np.linalg.norm(p - y))


# ---------------------------------------------------------------------------
# JSON wire format: {"schemaVersion": 1, "kind": ..., ...fields}
# ---------------------------------------------------------------------------

_KIND_NAMES = {
    Halfspace: "halfspace",
    Hyperplane: "hyperplane",
    Ball: "ball",
    Box: "box",
    AffineFlat: "affine_flat",
    CircularCone: "circular_cone",
    Polytope: "polytope",
    TranslatedCone: "translated_cone",
}

_FIELDS = {
    "halfspace": ("normal", "offset"),
    "hyperplane": ("normal", "offset"),
    "ball": ("center", "radius"),
    "box": ("lower", "upper"),
    "affine_flat": ("base", "basis"),
    "circular_cone": ("apex", "axis", "halfAngle"),
    "polytope": ("vertices",),
    "translated_cone": ("vertex", "generators"),
}


def set_to_dict(s: ConvexSet) -> dict:
    kind = _KIND_NAMES[type(s)]
    d = {"schemaVersion": SCHEMA_VERSION, "kind": kind}
    if kind in ("halfspace", "hyperplane"):
        d["normal"] = s.normal.tolist()
        d["offset"] = s.offset
    elif kind == "ball":
        d["center"] = s.center.tolist()
        d["radius"] = s.radius
    elif kind == "box":
        d["lower"] = s.lower.tolist()
        d["upper"] = s.upper.tolist()
    elif kind == "affine_flat":
        d["base"] = s.base.tolist()
        d["basis"] = s.basis.tolist()
    elif kind == "circular_cone":
        d["apex"] = s.apex.tolist()
        d["axis"] = s.axis.tolist()
        d["halfAngle"] = s.half_angle
    elif kind == "polytope":
        d["vertices"] = s.vertices.tolist()
    else:
        d["vertex"] = s.vertex.tolist()
        d["generators"] = s.generators.tolist()
    return d


def set_from_dict(d: dict) -> ConvexSet:
    if not isinstance(d, dict):
        raise InvalidSet("set description must be a JSON object")
    if "kind" not in d:
        raise InvalidSet('set description is missing the "kind" field')
    kind = d["kind"]
    if kind not in _FIELDS:
        raise InvalidSet(f'unknown set kind "{kind}"')
    version = d.get("schemaVersion", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidSet(f"unsupported schemaVersion {version!r}")
    allowed = set(_FIELDS[kind]) | {"kind", "schemaVersion"}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise InvalidSet(f'unknown field(s) {unknown} for kind "{kind}"')
    missing = [f for f in _FIELDS[kind] if f not in d]
    if missing:
        raise InvalidSet(f'missing field(s) {missing} for kind "{kind}"')
    if kind == "halfspace":
        return Halfspace(d["normal"], d["offset"])
    if kind == "hyperplane":
        return Hyperplane(d["normal"], d["offset"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "box":
        return Box(d["lower"], d["upper"])
    if kind == "affine_flat":
        return AffineFlat(d["base"], d["basis"])
    if kind == "circular_cone":
        return CircularCone(d["apex"], d["axis"], d["halfAngle"])
    if kind == "polytope":
        return Polytope(d["vertices"])
    return TranslatedCone(d["vertex"], d["generators"])


def family_to_dict(family: Family) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "sets": [set_to_dict(s) for s in family.sets],
    }


def family_from_dict(d: dict) -> Family:
    if not isinstance(d, dict):
        raise InvalidSet("family description must be a JSON object")
    unknown = sorted(set(d) - {"schemaVersion", "sets"})
    if unknown:
        raise InvalidSet(f"unknown field(s) {unknown} in family description")
    if "sets" not in d or not isinstance(d["sets"], list) or not d["sets"]:
        raise InvalidSet('family description needs a non-empty "sets" list')
    version = d.get("schemaVersion", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidSet(f"unsupported schemaVersion {version!r}")
    return Family(tuple(set_from_dict(s) for s in d["sets"]))
