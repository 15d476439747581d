"""Regularity laboratory: four canonical two-set configurations with exact
intersection-distance oracles, sequence generators, experiment runners and
the cone-hull enlargement certificate.

case1  two balls with interior-overlapping intersection (lens)
case2  circular cone with its tangent plane along a generatrix
case3  circular cone with a halfspace cut parallel to a generatrix
case4  twin pyramids meeting exactly in a shared planar polygon

Cases 1 and 4 are regular (vanishing per-set distances force vanishing
intersection distance); the sequences of cases 2 and 3 drive the per-set
distances to zero while the intersection distance stays pinned.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .conehull import (
    BoundedInteriorReport,
    EnlargementPair,
    bounded_interior_report,
    build_enlargement,
)
from .errors import InvalidSet, SolverFailure
from .sets import (
    DEFAULT_TOL,
    AffineFlat,
    Ball,
    CircularCone,
    Family,
    Halfspace,
    Polytope,
    TolerancePolicy,
    as_point,
    contains,
    distance,
    dykstra_distance,
    project,
)

# policy used by scenario-level Dykstra cross checks; the stopping rule
# extrapolates the geometric tail, so distance estimates are reliable to
# about proj_tol on these geometries
SCENARIO_DYKSTRA_TOL = TolerancePolicy(
    proj_tol=1e-9, geom_tol=1e-8, max_inner_iters=500_000
)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A named family with an exact intersection-distance oracle, witness
    points, a diagnostic sequence generator and a certified probe sampler
    (probes on which the Dykstra cross-check is numerically meaningful)."""

    name: str
    family: Family
    exact_intersection_distance: Callable[[np.ndarray], float]
    witnesses: tuple
    sequence: Callable[[int], np.ndarray]
    probe_sampler: Callable[[np.random.Generator], np.ndarray]
    params: dict
    tags: frozenset
    dykstra_policy: TolerancePolicy = SCENARIO_DYKSTRA_TOL
    sequence_length: Optional[int] = None


# ---------------------------------------------------------------------------
# small planar helpers
# ---------------------------------------------------------------------------


def _segment_distance_2d(p, a, b) -> float:
    ab = b - a
    t = float(np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _order_convex_polygon(pts2: np.ndarray) -> np.ndarray:
    c = pts2.mean(axis=0)
    ang = np.arctan2(pts2[:, 1] - c[1], pts2[:, 0] - c[0])
    return pts2[np.argsort(ang)]


def _polygon_distance_2d(p, poly: np.ndarray) -> float:
    """Distance from a 2-D point to a convex polygon given by ordered
    vertices (0 inside)."""
    m = poly.shape[0]
    if m == 1:
        return float(np.linalg.norm(p - poly[0]))
    if m == 2:
        return _segment_distance_2d(p, poly[0], poly[1])
    inside = True
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        e = b - a
        if e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0]) < 0:
            inside = False
            break
    if inside:
        return 0.0
    return min(
        _segment_distance_2d(p, poly[i], poly[(i + 1) % m]) for i in range(m)
    )


def _golden_directions(n: int, count: int) -> np.ndarray:
    """Deterministic well-spread unit directions in R^n."""
    out = np.zeros((count, n))
    golden = np.pi * (3 - np.sqrt(5))
    for i in range(count):
        if n == 2:
            a = golden * i
            out[i] = (np.cos(a), np.sin(a))
        else:
            z = 1 - 2 * (i + 0.5) / count
            r = np.sqrt(max(1 - z * z, 0.0))
            a = golden * i
            v = np.zeros(n)
            v[0], v[1], v[2] = r * np.cos(a), r * np.sin(a), z
            out[i] = v / np.linalg.norm(v)
    return out


# ---------------------------------------------------------------------------
# case 1: two-ball lens
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _LensGeometry:
    c1: np.ndarray
    r1: float
    c2: np.ndarray
    r2: float
    axis: np.ndarray
    rim_center: np.ndarray
    rim_radius: float
    inner_center: np.ndarray
    inner_radius: float

    def nearest(self, x) -> np.ndarray:
        x = as_point(x, dim=3)
        d1 = np.linalg.norm(x - self.c1)
        d2 = np.linalg.norm(x - self.c2)
        if d1 <= self.r1 and d2 <= self.r2:
            return x
        # a cap candidate is the metric projection onto one ball, valid
        # only when the probe is outside that ball and the projection is
        # feasible for the other; for interior probes the projection is
        # the probe itself and never lands in the lens here
        if d1 > self.r1:
            p1 = self.c1 + self.r1 * (x - self.c1) / d1
            if np.linalg.norm(p1 - self.c2) <= self.r2:
                return p1
        if d2 > self.r2:
            p2 = self.c2 + self.r2 * (x - self.c2) / d2
            if np.linalg.norm(p2 - self.c1) <= self.r1:
                return p2
        w = x - self.rim_center
        h = float(w @ self.axis)
        v = w - h * self.axis
        nv = np.linalg.norm(v)
        if nv == 0.0:
            # on the axis: any rim point is nearest; pick a fixed one
            v = np.array([0.0, 1.0, 0.0])
            if abs(self.axis[1]) > 0.9:
                v = np.array([0.0, 0.0, 1.0])
            v = v - (v @ self.axis) * self.axis
            nv = np.linalg.norm(v)
        return self.rim_center + self.rim_radius * v / nv

    def dist(self, x) -> float:
        x = as_point(x, dim=3)
        return float(np.linalg.norm(x - self.nearest(x)))


def scenario_case1(
    radius_a: float = 1.0, radius_b: float = 1.0, center_gap: float = 1.0
) -> Scenario:
    """Two balls in R^3 whose intersection is a lens with nonempty
    interior; the exact oracle resolves cap points and the rim circle in
    closed form."""
    ra, rb, gap = float(radius_a), float(radius_b), float(center_gap)
    if not (abs(ra - rb) < gap < ra + rb):
        raise InvalidSet(
            "balls must overlap with nonempty interior and a proper rim "
            f"(need |ra-rb| < gap < ra+rb, got ra={ra} rb={rb} gap={gap})"
        )
    c1 = np.zeros(3)
    c2 = np.array([gap, 0.0, 0.0])
    axis = np.array([1.0, 0.0, 0.0])
    a = (gap * gap + ra * ra - rb * rb) / (2 * gap)
    rim_r = float(np.sqrt(ra * ra - a * a))
    lo, hi = gap - rb, ra
    inner_c = c1 + 0.5 * (lo + hi) * axis
    inner_r = min(ra - abs(0.5 * (lo + hi)), rb - abs(gap - 0.5 * (lo + hi)))
    geom = _LensGeometry(
        c1=c1, r1=ra, c2=c2, r2=rb, axis=axis,
        rim_center=c1 + a * axis, rim_radius=rim_r,
        inner_center=inner_c, inner_radius=float(inner_r),
    )
    family = Family((Ball(c1, ra), Ball(c2, rb)), intersection_oracle=geom.dist)
    witnesses = (inner_c.copy(), inner_c + 0.5 * inner_r * np.array([0, 1.0, 0]))
    dirs = _golden_directions(3, 4096)

    def sequence(k: int) -> np.ndarray:
        u = dirs[k % len(dirs)]
        boundary = geom.nearest(inner_c + (ra + rb) * u)
        return boundary + u / (k + 1.0)

    def probe_sampler(rng: np.random.Generator) -> np.ndarray:
        return inner_c + rng.normal(size=3) * (0.8 * (ra + rb))

    return Scenario(
        name="case1",
        family=family,
        exact_intersection_distance=geom.dist,
        witnesses=witnesses,
        sequence=sequence,
        probe_sampler=probe_sampler,
        params={"radiusA": ra, "radiusB": rb, "centerGap": gap, "geometry": geom},
        tags=frozenset({"interior", "bounded"}),
    )


# ---------------------------------------------------------------------------
# case 2: cone with tangent plane
# ---------------------------------------------------------------------------


def scenario_case2(
    half_angle: float = np.pi / 6,
    delta: float = 0.5,
    r_schedule: Optional[Sequence[float]] = None,
) -> Scenario:
    """Circular cone (apex at the origin, axis +z) and its tangent plane
    along the generatrix at azimuth zero.

    The sets meet exactly in the generatrix; the distance oracle uses the
    full line through it.  The sequence walks out on the cone surface at
    constant distance ``delta`` from that line, so its per-set distances
    vanish while the intersection distance stays at delta.
    """
    theta = float(half_angle)
    if not (0.0 < theta < np.pi / 2):
        raise InvalidSet("half angle must lie in (0, pi/2)")
    if delta <= 0:
        raise InvalidSet("delta must be positive")
    if r_schedule is None:
        r_schedule = [float(2**k) for k in range(21)]
    rs = [float(r) for r in r_schedule]
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise InvalidSet("r schedule must be increasing")
    # feasibility of the surface construction: need |cos(phi)| <= 1
    r_min_ok = delta / np.sin(2 * theta)
    if rs[0] < r_min_ok - 1e-15:
        raise InvalidSet(
            f"delta={delta} too large for the smallest radius {rs[0]} "
            f"(need r >= delta/sin(2*half_angle) = {r_min_ok:.6g})"
        )
    g = np.array([np.sin(theta), 0.0, np.cos(theta)])
    n0 = np.array([np.cos(theta), 0.0, -np.sin(theta)])
    cone = CircularCone(np.zeros(3), np.array([0.0, 0.0, 1.0]), theta)
    plane = AffineFlat(np.zeros(3), np.vstack([g, [0.0, 1.0, 0.0]]))

    def line_dist(x) -> float:
        x = as_point(x, dim=3)
        return float(np.linalg.norm(x - (x @ g) * g))

    family = Family((cone, plane), intersection_oracle=line_dist)

    def surface_point(r: float) -> np.ndarray:
        # solve for the azimuth with line distance exactly delta; the
        # direct arccos form cancels catastrophically at large r, so work
        # with eta = 1 - <x_hat, g> throughout
        q = (delta / r) ** 2
        eta = q / (1.0 + np.sqrt(max(1.0 - q, 0.0)))
        s2 = np.sin(theta) ** 2
        w = min(eta / s2, 2.0)
        cos_phi = 1.0 - w
        sin_phi = np.sqrt(max(w * (2.0 - w), 0.0))
        raw = r * np.array(
            [
                np.sin(theta) * cos_phi,
                np.sin(theta) * sin_phi,
                np.cos(theta),
            ]
        )
        # snap onto the closed cone so the per-set distance is exactly zero
        return project(cone, raw)

    def sequence(k: int) -> np.ndarray:
        return surface_point(rs[min(k, len(rs) - 1)])

    def probe_sampler(rng: np.random.Generator) -> np.ndarray:
        # certified probe class: the tangency makes Dykstra estimates
        # meaningless for generic probes, so sample ray points displaced
        # along the plane's normal (both sides); those converge in a few
        # cycles and the line oracle is exact there
        t = rng.uniform(0.0, 6.0)
        s = rng.uniform(-0.8, 3.0)
        return t * g + s * n0

    return Scenario(
        name="case2",
        family=family,
        exact_intersection_distance=line_dist,
        witnesses=(0.5 * g, 2.0 * g),
        sequence=sequence,
        probe_sampler=probe_sampler,
        params={
            "halfAngle": theta,
            "delta": delta,
            "rSchedule": rs,
            "generatrix": g,
            "planeNormal": n0,
        },
        tags=frozenset(),
        sequence_length=len(rs),
    )


# ---------------------------------------------------------------------------
# case 3: cone with a parallel-to-generatrix halfspace cut
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Case3Params:
    """p is the offset of the secant plane from the parallel tangent
    plane, d the pinned intersection distance, r_schedule the sequence of
    formula radii."""

    p: float
    d: float
    r_schedule: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "r_schedule", tuple(float(r) for r in self.r_schedule))
        if self.p <= 0 or self.d <= 0:
            raise InvalidSet("need p > 0 and d > 0")
        if any(b <= a for a, b in zip(self.r_schedule, self.r_schedule[1:])):
            raise InvalidSet("r schedule must be increasing")
        for r in self.r_schedule:
            if 2 * self.p * r - self.p * self.p <= 0:
                raise InvalidSet(
                    f"radius {r} violates the formula domain 2*p*r - p^2 > 0"
                )


def case3_distance(params: Case3Params, k: int) -> float:
    """Closed-form per-cone distance sqrt(r^2 + d^2 + 2 d sqrt(2pr - p^2)) - r."""
    r = params.r_schedule[k]
    return case3_distance_value(params.p, params.d, r)


def case3_distance_value(p: float, d: float, r: float) -> float:
    inner = 2.0 * p * r - p * p
    if inner < 0:
        raise InvalidSet(f"formula domain violated: 2*p*r - p^2 = {inner} < 0")
    return float(np.sqrt(r * r + d * d + 2.0 * d * np.sqrt(inner)) - r)


@dataclass(frozen=True)
class _Case3Geometry:
    theta: float
    c: float  # plane offset, equals the formula parameter p
    g: np.ndarray
    n0: np.ndarray
    origin: np.ndarray  # chart origin (nearest plane point to the apex ray)
    u0: float  # chart coordinate of the parabola vertex
    p_plane: float  # in-plane semi-latus rectum c*tan(theta)

    def chart(self, u: float, y: float) -> np.ndarray:
        return self.origin + u * self.g + y * np.array([0.0, 1.0, 0.0])

    def chart_coords(self, x) -> tuple:
        x = as_point(x, dim=3)
        rel = x - self.origin
        return float(rel @ self.g), float(rel[1]), float(rel @ self.n0)

    def parabola_curve_distance(self, s: float, y: float) -> float:
        """In-plane distance to the parabola curve y^2 = 2 p_plane s
        (s measured from the vertex)."""
        pp = self.p_plane
        roots = np.roots([1.0, 0.0, 2 * pp * (pp - s), -2 * pp * pp * y])
        best = np.inf
        for t in roots[np.abs(roots.imag) < 1e-9 * (1 + np.abs(roots.real))].real:
            best = min(best, (t * t / (2 * pp) - s) ** 2 + (t - y) ** 2)
        return float(np.sqrt(best))

    def region_distance(self, s: float, y: float) -> float:
        if y * y <= 2 * self.p_plane * s:
            return 0.0
        return self.parabola_curve_distance(s, y)


def _case3_geometry(p: float, half_angle: float) -> _Case3Geometry:
    theta = float(half_angle)
    if not (0.0 < theta < np.pi / 2):
        raise InvalidSet("half angle must lie in (0, pi/2)")
    c = float(p)
    g = np.array([np.sin(theta), 0.0, np.cos(theta)])
    n0 = np.array([np.cos(theta), 0.0, -np.sin(theta)])
    return _Case3Geometry(
        theta=theta,
        c=c,
        g=g,
        n0=n0,
        origin=-c * n0,
        u0=c * (1.0 / np.tan(theta) - np.tan(theta)) / 2.0,
        p_plane=c * np.tan(theta),
    )


def case3_formula_point(
    p: float, d: float, r: float, half_angle: float = np.pi / 4
) -> tuple:
    """Secant-plane point whose exact distance to the cone equals the
    closed form for (p, d, r); returns (point, cone).

    The point sits at the parabola point with formula radius r, displaced
    in the in-plane direction perpendicular to the generatrix by
    d / cos(half_angle).
    """
    geo = _case3_geometry(p, half_angle)
    inner = 2 * p * r - p * p
    if inner < 0:
        raise InvalidSet("formula domain violated")
    u_q = (r / np.sin(geo.theta) - geo.c * np.sin(geo.theta)) / np.cos(geo.theta)
    y_q = np.sqrt(inner) / np.cos(geo.theta)
    point = geo.chart(u_q, y_q + d / np.cos(geo.theta))
    cone = CircularCone(np.zeros(3), np.array([0.0, 0.0, 1.0]), geo.theta)
    return point, cone


DEFAULT_CASE3_HALF_ANGLE = float(np.arccos(0.1))


def scenario_case3(
    params: Case3Params, half_angle: float = DEFAULT_CASE3_HALF_ANGLE
) -> Scenario:
    """Circular cone plus the halfspace bounded by a secant plane parallel
    to a generatrix, cut at offset p from the parallel tangent plane.

    The halfspace is taken on the side away from the cone axis, so the
    intersection is the sliver of the cone between the secant plane and
    the surface near the tangent generatrix (unbounded, with interior).
    The sequence sits in the secant plane at exact in-plane distance d
    from the parabolic slice, displaced along the outward parabola
    normal; for in-plane points the in-plane distance to the slice equals
    the true distance to the intersection.
    """
    geo = _case3_geometry(params.p, half_angle)
    cone = CircularCone(np.zeros(3), np.array([0.0, 0.0, 1.0]), geo.theta)
    half = Halfspace(-geo.n0, geo.c)  # {<w, n0> >= -c}

    def oracle(x) -> float:
        x = as_point(x, dim=3)
        # candidate: only the cone active; the membership slack covers
        # roundoff only, so a genuinely infeasible candidate is rejected
        # even at large radii
        pc = project(cone, x)
        cands = []
        slack = 1e-12 + 16 * np.finfo(float).eps * float(np.linalg.norm(pc))
        if float(-geo.n0 @ pc) <= geo.c + slack:
            cands.append(float(np.linalg.norm(x - pc)))
        # candidate: only the plane active
        excess = float(-geo.n0 @ x) - geo.c
        if excess > 0:
            ph = x + excess * geo.n0
        else:
            ph = x
        if contains(cone, ph, DEFAULT_TOL):
            cands.append(float(np.linalg.norm(x - ph)))
        # candidate: both active (nearest point on the parabola)
        u, y, h = geo.chart_coords(x)
        s = u - geo.u0
        cands.append(float(np.hypot(h, geo.parabola_curve_distance(s, y))))
        return min(cands)

    family = Family((cone, half), intersection_oracle=oracle)

    def sequence(k: int) -> np.ndarray:
        r = params.r_schedule[min(k, len(params.r_schedule) - 1)]
        u_q = (r / np.sin(geo.theta) - geo.c * np.sin(geo.theta)) / np.cos(geo.theta)
        y_q = np.sqrt(2 * params.p * r - params.p**2) / np.cos(geo.theta)
        s_q = u_q - geo.u0
        nu = np.array([-geo.p_plane, y_q])
        nu = nu / np.linalg.norm(nu)
        s_x, y_x = s_q + params.d * nu[0], y_q + params.d * nu[1]
        x = geo.chart(geo.u0 + s_x, y_x)
        # nudge into the closed halfspace so its distance is exactly zero
        overshoot = float(-geo.n0 @ x) - geo.c
        x = x + (overshoot + 1e-12 * (1.0 + abs(r))) * geo.n0
        return x

    def probe_sampler(rng: np.random.Generator) -> np.ndarray:
        s = rng.uniform(0.0, 20.0)
        y = rng.uniform(-8.0, 8.0)
        return geo.chart(geo.u0 + s, y)

    # axis points belong to the outer halfspace only up to z = c/sin(theta)
    z_w = 0.5 * geo.c / np.sin(geo.theta)
    witnesses = (
        np.array([0.0, 0.0, z_w]),
        geo.chart(geo.u0 + 4 * geo.p_plane, 0.0),
    )
    return Scenario(
        name="case3",
        family=family,
        exact_intersection_distance=oracle,
        witnesses=witnesses,
        sequence=sequence,
        probe_sampler=probe_sampler,
        params={
            "case3": params,
            "halfAngle": geo.theta,
            "geometry": geo,
        },
        tags=frozenset({"interior"}),
        sequence_length=len(params.r_schedule),
    )


def case3_effective_params(scenario: Scenario, x) -> tuple:
    """Exact (d_eff, r_eff) for which the closed form reproduces the cone
    distance of an arbitrary secant-plane point."""
    geo: _Case3Geometry = scenario.params["geometry"]
    p = scenario.params["case3"].p
    x = as_point(x, dim=3)
    r_eff = float(x[2] * np.sin(geo.theta))
    _, y, _ = geo.chart_coords(x)
    d_eff = abs(y) * np.cos(geo.theta) - np.sqrt(max(2 * p * r_eff - p * p, 0.0))
    return d_eff, r_eff


# ---------------------------------------------------------------------------
# case 4: twin pyramids over a shared planar polygon
# ---------------------------------------------------------------------------


def make_case4_instance(which: str = "square") -> dict:
    """Prebuilt twin-polytope instances meeting exactly in a planar
    polygon on z = 0."""
    if which == "square":
        base = np.array(
            [[1.0, 1, 0], [1, -1, 0], [-1, -1, 0], [-1, 1, 0]], dtype=float
        )
        apex_top = np.array([0.0, 0.0, 1.0])
        apex_bot = np.array([0.0, 0.0, -1.2])
    elif which == "quad":
        base = np.array(
            [[1.4, 0.2, 0], [0.3, 1.1, 0], [-1.2, 0.5, 0], [-0.6, -1.3, 0], [0.8, -1.0, 0]],
            dtype=float,
        )
        apex_top = np.array([0.15, -0.1, 0.9])
        apex_bot = np.array([-0.1, 0.1, -0.8])
    else:
        raise InvalidSet(f"unknown case4 instance {which!r}")
    A = Polytope(np.vstack([base, apex_top]))
    B = Polytope(np.vstack([base, apex_bot]))
    plane = AffineFlat(np.zeros(3), np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    return {"A": A, "B": B, "plane": plane}


def scenario_case4(
    A: Polytope, B: Polytope, plane: AffineFlat, tol: TolerancePolicy = DEFAULT_TOL
) -> Scenario:
    """Two polytopes on opposite sides of a plane, meeting exactly in the
    shared polygonal facet; the oracle is the exact polygon distance.

    Validation: all vertices of each polytope lie (weakly) on one side of
    the plane, the in-plane vertex sets of A and B coincide, and the
    shared polygon has nonempty relative interior.
    """
    if plane.dim != 3 or plane._onb.shape[0] != 2:
        raise InvalidSet("case4 needs a 2-flat in R^3")
    normal = np.cross(plane._onb[0], plane._onb[1])
    normal /= np.linalg.norm(normal)

    def side(v):
        return float((v - plane.base) @ normal)

    sides_a = np.array([side(v) for v in A.vertices])
    sides_b = np.array([side(v) for v in B.vertices])
    if np.all(sides_a >= -tol.geom_tol) and np.all(sides_b <= tol.geom_tol):
        up = normal
    elif np.all(sides_a <= tol.geom_tol) and np.all(sides_b >= -tol.geom_tol):
        up = -normal
        sides_a, sides_b = -sides_a, -sides_b
    else:
        raise InvalidSet("A and B must lie on opposite sides of the plane")

    on_a = A.vertices[np.abs(sides_a) <= tol.geom_tol]
    on_b = B.vertices[np.abs(sides_b) <= tol.geom_tol]
    if on_a.shape[0] < 3 or on_a.shape[0] != on_b.shape[0]:
        raise InvalidSet("shared facet must be a polygon with >= 3 vertices")
    order = np.lexsort((on_a[:, 1], on_a[:, 0]))
    order_b = np.lexsort((on_b[:, 1], on_b[:, 0]))
    if not np.allclose(on_a[order], on_b[order_b], atol=10 * tol.geom_tol):
        raise InvalidSet("A and B do not share the same in-plane facet")

    e1, e2 = plane._onb
    poly2 = _order_convex_polygon(
        np.array([[(v - plane.base) @ e1, (v - plane.base) @ e2] for v in on_a])
    )
    area = 0.0
    for i in range(len(poly2)):
        a, b = poly2[i], poly2[(i + 1) % len(poly2)]
        area += a[0] * b[1] - b[0] * a[1]
    if abs(area) / 2 <= tol.geom_tol:
        raise InvalidSet("shared polygon has empty relative interior")

    def oracle(x) -> float:
        x = as_point(x, dim=3)
        rel = x - plane.base
        p2 = np.array([rel @ e1, rel @ e2])
        h = float(rel @ normal)
        return float(np.hypot(h, _polygon_distance_2d(p2, poly2)))

    family = Family((A, B), intersection_oracle=oracle)
    centroid2 = poly2.mean(axis=0)
    centroid = plane.base + centroid2[0] * e1 + centroid2[1] * e2
    witnesses = (centroid.copy(),)
    circumradius = float(np.max(np.linalg.norm(poly2 - centroid2, axis=1)))

    def sequence(k: int) -> np.ndarray:
        ang = 2.399963229728653 * k  # golden angle drift
        rad = circumradius * (0.6 + 0.6 * np.sin(0.7 * ang))
        probe = (
            centroid
            + rad * (np.cos(ang) * e1 + np.sin(ang) * e2)
            + ((-1.0) ** k) * (0.8 / (k + 1.0)) * up
        )
        pa = project(A, probe, tol)
        pb = project(B, probe, tol)
        return 0.5 * (pa + pb)

    def probe_sampler(rng: np.random.Generator) -> np.ndarray:
        return centroid + rng.normal(size=3) * (1.2 * circumradius)

    return Scenario(
        name="case4",
        family=family,
        exact_intersection_distance=oracle,
        witnesses=witnesses,
        sequence=sequence,
        probe_sampler=probe_sampler,
        params={
            "A": A,
            "B": B,
            "plane": plane,
            "polygon2d": poly2,
            "centroid": centroid,
            "up": up,
            "circumradius": circumradius,
        },
        tags=frozenset({"bounded"}),
    )


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass
class GPRReport:
    per_set_distance_tails: list
    intersection_distance_tail: float
    verdict: str  # gprHolds | gprFails | inconclusive
    table: list  # rows {k, perSet: [...], intersection}
    threshold: float

    def to_csv(self, path):
        n_sets = len(self.table[0]["perSet"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k"] + [f"d_set_{i + 1}" for i in range(n_sets)] + ["d_intersection"])
            for row in self.table:
                w.writerow(
                    [row["k"]]
                    + [repr(float(v)) for v in row["perSet"]]
                    + [repr(float(row["intersection"]))]
                )


def gpr_experiment(
    scenario: Scenario,
    horizon: int,
    threshold: float,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> GPRReport:
    """Tabulate per-set and intersection distances of the scenario
    sequence and judge the family-regularity property.

    Verdict "gprFails" needs every per-set tail below the threshold while
    the intersection tail exceeds 100x the threshold; "gprHolds" needs
    the intersection tail to drop below 10x the threshold as well.
    Tails are maxima over the final third of the table.
    """
    if horizon < 10:
        raise InvalidSet("horizon must be at least 10")
    if scenario.sequence_length is not None:
        horizon = min(horizon, scenario.sequence_length)
    rows = []
    for k in range(horizon):
        x = scenario.sequence(k)
        per = scenario.family.per_set_distances(x, tol)
        rows.append(
            {
                "k": k,
                "perSet": [float(v) for v in per],
                "intersection": float(scenario.exact_intersection_distance(x)),
            }
        )
    tail = rows[max(0, len(rows) - max(1, len(rows) // 3)):]
    per_tails = [
        max(r["perSet"][i] for r in tail) for i in range(len(rows[0]["perSet"]))
    ]
    isect_tail = max(r["intersection"] for r in tail)
    if max(per_tails) <= threshold and isect_tail >= 100.0 * threshold:
        verdict = "gprFails"
    elif max(per_tails) <= threshold and isect_tail <= 10.0 * threshold:
        verdict = "gprHolds"
    else:
        verdict = "inconclusive"
    return GPRReport(
        per_set_distance_tails=per_tails,
        intersection_distance_tail=isect_tail,
        verdict=verdict,
        table=rows,
        threshold=threshold,
    )


@dataclass
class Lemma1Report:
    deltas: list
    max_intersection_distance: list
    ratios: list
    fitted_c: float

    @property
    def shrinks(self) -> bool:
        vals = self.max_intersection_distance
        return all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def lemma1_check(
    scenario: Scenario,
    delta_schedule: Sequence[float],
    trials: int,
    rng: np.random.Generator,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> Lemma1Report:
    """Sampled check that near-feasible points are near the intersection.

    For each delta, draws ``trials`` points whose largest per-set
    distance is at most delta (interior points of the intersection plus
    outward-perturbed boundary points) and records the largest observed
    intersection distance.  Only interior-and-bounded scenarios qualify.
    """
    if not {"interior", "bounded"} <= scenario.tags:
        raise InvalidSet(
            "lemma1_check needs a scenario with bounded intersection and "
            f"nonempty interior; {scenario.name} is tagged {set(scenario.tags)}"
        )
    geom: _LensGeometry = scenario.params["geometry"]
    deltas = [float(d) for d in delta_schedule]
    maxima = []
    for delta in deltas:
        worst = 0.0
        found = 0
        attempts = 0
        while found < trials:
            attempts += 1
            if attempts > 200 * trials:
                raise SolverFailure(
                    f"could not sample {trials} points at delta={delta}",
                    achieved=float(found),
                )
            cloud = geom.inner_center + rng.normal(size=3) * (geom.r1 + geom.r2)
            y = geom.nearest(cloud)
            if delta > 0:
                u = rng.normal(size=3)
                u /= np.linalg.norm(u)
                x = y + rng.uniform(0.0, 2.0 * delta) * u
            else:
                x = y
            if float(np.max(scenario.family.per_set_distances(x, tol))) > delta:
                continue
            found += 1
            worst = max(worst, scenario.exact_intersection_distance(x))
        maxima.append(worst)
    ratios = [m / d if d > 0 else 0.0 for m, d in zip(maxima, deltas)]
    return Lemma1Report(
        deltas=deltas,
        max_intersection_distance=maxima,
        ratios=ratios,
        fitted_c=max(ratios) if any(ratios) else 0.0,
    )


@dataclass
class GPRCertificate:
    epsilon: float
    pair: EnlargementPair
    lemma3_report: BoundedInteriorReport
    tail_index: int
    enlarged_distance_bound: float
    base_distance_bound: float


def lemma4_certificate(
    scenario: Scenario,
    epsilon: float,
    horizon: int,
    tol: TolerancePolicy = DEFAULT_TOL,
    rng: Optional[np.random.Generator] = None,
    ray_samples: int = 32,
) -> GPRCertificate:
    """Constructive regularity certificate for a case-4 scenario.

    Chooses a probe x off the plane with ||x - P_x|| = epsilon/2 and P_x
    in the relative interior of the shared polygon, builds the two cone
    hulls from x and its reflection, certifies their intersection bounded
    with interior (lemma3 evidence), finds the first index from which the
    sequence stays within epsilon/2 of the hull intersection, and then
    verifies against the exact polygon oracle that those tail points are
    within epsilon of the true intersection.
    """
    if scenario.name != "case4":
        raise InvalidSet("lemma4_certificate needs a case4 scenario")
    if epsilon <= 0:
        raise InvalidSet("epsilon must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    A: Polytope = scenario.params["A"]
    B: Polytope = scenario.params["B"]
    plane: AffineFlat = scenario.params["plane"]
    up: np.ndarray = scenario.params["up"]
    centroid: np.ndarray = scenario.params["centroid"]

    # x on the side opposite to A (so x is outside A) at distance eps/2
    x = centroid - 0.5 * epsilon * up
    pair = build_enlargement(A, B, plane, x, tol)
    if np.linalg.norm(pair.x - pair.px) > 0.5 * epsilon + tol.geom_tol:
        raise SolverFailure("probe ended farther than epsilon/2 from its projection")
    report = bounded_interior_report(pair, ray_samples, tol, rng)

    cones = Family((pair.cone_a.realized, pair.cone_b.realized))
    enlarged = []
    base = []
    for k in range(horizon):
        xk = scenario.sequence(k)
        enlarged.append(dykstra_distance(cones, xk, scenario.dykstra_policy))
        base.append(float(scenario.exact_intersection_distance(xk)))
    enlarged = np.array(enlarged)
    base = np.array(base)
    suffix_max = np.maximum.accumulate(enlarged[::-1])[::-1]
    ok = np.flatnonzero(suffix_max <= 0.5 * epsilon)
    if ok.size == 0:
        raise SolverFailure(
            "no tail index found within the horizon "
            f"(best suffix bound {float(suffix_max.min()):.3e})",
            achieved=float(suffix_max.min()),
        )
    tail_index = int(ok[0])
    base_bound = float(np.max(base[tail_index:]))
    enlarged_bound = float(np.max(enlarged[tail_index:]))
    if base_bound > epsilon + tol.geom_tol:
        raise SolverFailure(
            f"tail point exceeds epsilon against the exact oracle "
            f"({base_bound:.3e} > {epsilon})",
            achieved=base_bound,
        )
    return GPRCertificate(
        epsilon=float(epsilon),
        pair=pair,
        lemma3_report=report,
        tail_index=tail_index,
        enlarged_distance_bound=enlarged_bound,
        base_distance_bound=base_bound,
    )


@dataclass(frozen=True)
class ModulusPoint:
    eps: float
    delta_hat: float
    samples_used: int


def regularity_modulus(
    family: Family,
    region: Ball,
    eps_grid: Sequence[float],
    samples: int,
    rng: np.random.Generator,
    oracle: Optional[Callable] = None,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> list:
    """Empirical eps-delta regularity modulus over a bounded region.

    For each eps, bisects for the largest delta such that all sampled
    region points with max per-set distance <= delta have intersection
    distance <= eps.  Returns delta_hat = 0 when even a tiny delta fails.
    The sampler mixes raw region points with points pulled toward the
    family by a few alternating projection sweeps, then perturbed.
    """
    if oracle is None:
        oracle = family.intersection_oracle
    if oracle is None:
        oracle = lambda x: dykstra_distance(family, x, tol)  # noqa: E731

    def draw(delta: float):
        pts = []
        attempts = 0
        while len(pts) < samples:
            attempts += 1
            if attempts > 400 * samples:
                raise SolverFailure(
                    f"could not sample {samples} points at delta={delta}",
                    achieved=float(len(pts)),
                )
            z = region.center + rng.normal(size=region.dim) * (region.radius / 2)
            y = z
            for _ in range(6):
                for s in family.sets:
                    y = project(s, y, tol)
            u = rng.normal(size=region.dim)
            u /= np.linalg.norm(u)
            x = y + rng.uniform(0.0, 2.0 * delta) * u
            if np.linalg.norm(x - region.center) > region.radius:
                continue
            if float(np.max(family.per_set_distances(x, tol))) > delta:
                continue
            pts.append(x)
        return pts

    cap = 2.0 * region.radius
    out = []
    for eps in eps_grid:
        eps = float(eps)

        def ok(delta: float) -> bool:
            return all(float(oracle(x)) <= eps for x in draw(delta))

        if not ok(min(1e-4, cap / 1e4)):
            out.append(ModulusPoint(eps=eps, delta_hat=0.0, samples_used=samples))
            continue
        if ok(cap):
            out.append(ModulusPoint(eps=eps, delta_hat=cap, samples_used=samples))
            continue
        lo, hi = min(1e-4, cap / 1e4), cap
        for _ in range(24):
            mid = float(np.sqrt(lo * hi))
            if ok(mid):
                lo = mid
            else:
                hi = mid
            if hi / lo < 1.2:
                break
        out.append(ModulusPoint(eps=eps, delta_hat=lo, samples_used=samples))
    return out
