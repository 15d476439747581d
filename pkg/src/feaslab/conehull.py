"""Cone hulls with a chosen vertex and the enlargement-pair construction.

The hull of a polytope base from an outside vertex is realized as a
translated finitely-generated cone (generators are the shifted base
vertices).  An enlargement pair couples the hull of one set taken from a
probe point with the hull of a second set taken from the probe's
reflection through its projection onto the shared intersection; the
bounded-interior report certifies numerically that the two hulls
intersect in a bounded set with nonempty interior.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidSet, SolverFailure
from .sets import (
    DEFAULT_TOL,
    AffineFlat,
    Family,
    Polytope,
    TolerancePolicy,
    TranslatedCone,
    as_point,
    contains,
    distance,
    dykstra_project,
    project,
)


@dataclass(frozen=True, eq=False)
class ConeHull:
    vertex: np.ndarray
    base: Polytope
    realized: TranslatedCone


@dataclass(frozen=True, eq=False)
class EnlargementPair:
    x: np.ndarray
    px: np.ndarray
    xs: np.ndarray
    cone_a: ConeHull
    cone_b: ConeHull
    plane: AffineFlat


@dataclass(frozen=True)
class BoundedInteriorReport:
    bounded_radius_bound: float
    interior_ball_radius: float
    witness_center: np.ndarray
    rays_sampled: int


def enlargement_to_dict(pair: EnlargementPair) -> dict:
    """JSON-ready description of an enlargement pair."""
    return {
        "x": pair.x.tolist(),
        "px": pair.px.tolist(),
        "xs": pair.xs.tolist(),
        "coneA": {
            "vertex": pair.cone_a.vertex.tolist(),
            "generators": pair.cone_a.realized.generators.tolist(),
        },
        "coneB": {
            "vertex": pair.cone_b.vertex.tolist(),
            "generators": pair.cone_b.realized.generators.tolist(),
        },
    }


def report_to_dict(report: BoundedInteriorReport) -> dict:
    return {
        "boundedRadiusBound": report.bounded_radius_bound,
        "interiorBallRadius": report.interior_ball_radius,
        "witnessCenter": report.witness_center.tolist(),
        "raysSampled": report.rays_sampled,
    }


def cone_hull(base: Polytope, vertex, tol: TolerancePolicy = DEFAULT_TOL) -> ConeHull:
    """Convex cone hull of the base polytope with the given vertex.

    The realized cone is generated exactly by the shifted base vertices,
    so it is the smallest translated finitely-generated cone with that
    vertex containing the base.
    """
    v = as_point(vertex, dim=base.dim)
    if distance(base, v, tol) <= tol.geom_tol:
        raise InvalidSet("cone hull vertex lies inside the base polytope")
    realized = TranslatedCone(v, base.vertices - v)
    return ConeHull(vertex=v, base=base, realized=realized)


def ray_min_parameter(x, d, origin=None) -> float:
    """Parameter t >= 0 minimizing ||(x - origin) + t (d - x)||.

    Closed form <x - o, x - d> / ||d - x||^2, clamped below at zero.  The
    norm is taken relative to ``origin`` (the zero vector by default).
    """
    xp = as_point(x)
    dp = as_point(d, dim=xp.size)
    o = np.zeros(xp.size) if origin is None else as_point(origin, dim=xp.size)
    diff = dp - xp
    denom = float(diff @ diff)
    if denom == 0.0:
        raise ValueError("ray direction point d must differ from x")
    t = float((xp - o) @ (xp - dp)) / denom
    return max(t, 0.0)


def sup_side_point(
    hull: ConeHull,
    d,
    t: float,
    origin=None,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> np.ndarray:
    """Point x + t (d - x) of the truncated (superior) side of the hull.

    Requires d in the base and 0 <= t <= ray_min_parameter(vertex, d,
    origin); the returned point always lies in the realized cone.
    """
    dp = as_point(d, dim=hull.vertex.size)
    if not contains(hull.base, dp, tol):
        raise ValueError("direction point d is not in the hull base")
    t_cap = ray_min_parameter(hull.vertex, dp, origin=origin)
    if t < -tol.geom_tol or t > t_cap + tol.geom_tol:
        raise ValueError(f"t={t} outside [0, t_d={t_cap}]")
    return hull.vertex + t * (dp - hull.vertex)


def symmetric_point(x, px) -> np.ndarray:
    """Reflection of x through px, i.e. 2 px - x."""
    xp = as_point(x)
    pp = as_point(px, dim=xp.size)
    return 2.0 * pp - xp


def lemma2_margin(A: Polytope, x, y, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """d(x, A) - d(y, A) for y on a segment from x into A.

    Nonnegative up to roundoff: the distance to a convex set is convex
    along the segment and vanishes at the far endpoint.
    """
    xp = as_point(x, dim=A.dim)
    yp = as_point(y, dim=A.dim)
    return distance(A, xp, tol) - distance(A, yp, tol)


def _in_plane_directions(plane: AffineFlat, count: int) -> np.ndarray:
    """Evenly spread unit directions inside a 2-D flat (golden-angle for
    higher-dimensional flats)."""
    q = plane._onb
    k = q.shape[0]
    if k == 0:
        raise InvalidSet("plane has no directions to sample")
    if k == 1:
        return np.array([q[0], -q[0]][: max(count, 1)])
    if k == 2:
        angles = 2 * np.pi * np.arange(count) / count
        return np.cos(angles)[:, None] * q[0] + np.sin(angles)[:, None] * q[1]
    golden = np.pi * (3 - np.sqrt(5))
    dirs = []
    for i in range(count):
        v = np.zeros(k)
        v[0] = np.cos(golden * i)
        v[1] = np.sin(golden * i)
        v[2:] = np.cos(golden * i / 2) * 0.3
        v /= np.linalg.norm(v)
        dirs.append(q.T @ v)
    return np.array(dirs)


def _sphere_directions(n: int, count: int) -> np.ndarray:
    """Deterministic well-spread unit directions in R^n (golden spiral
    for n = 3, golden angle otherwise)."""
    out = np.zeros((count, n))
    golden = np.pi * (3 - np.sqrt(5))
    for i in range(count):
        if n == 3:
            z = 1 - 2 * (i + 0.5) / count
            r = np.sqrt(max(1 - z * z, 0.0))
            out[i] = (r * np.cos(golden * i), r * np.sin(golden * i), z)
        elif n == 2:
            out[i] = (np.cos(golden * i), np.sin(golden * i))
        else:
            v = np.cos(golden * i * (1 + np.arange(n)))
            out[i] = v / np.linalg.norm(v)
    return out


def _exit_radius(point, direction, members, cap, tol) -> float:
    """sup of r with point + r*direction inside every member set, by
    doubling then bisection; returns inf past the cap."""

    def inside(r):
        p = point + r * direction
        return all(distance(s, p, tol) <= tol.geom_tol * (1 + r) for s in members)

    if not inside(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while inside(hi):
        lo, hi = hi, 2 * hi
        if hi > cap:
            return np.inf
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol.proj_tol * (1 + hi):
            break
    return lo


def build_enlargement(
    A: Polytope,
    B: Polytope,
    plane: AffineFlat,
    x,
    tol: TolerancePolicy = DEFAULT_TOL,
    relint_rays: int = 16,
) -> EnlargementPair:
    """Enlargement pair for two sets whose intersection sits in a plane.

    Projects x onto A intersect B (Dykstra), reflects it, and builds the
    two cone hulls.  Rejects the construction when x is in A, when the
    projection is not in the relative interior of the intersection, or
    when the reflected point lands in B.
    """
    xp = as_point(x, dim=A.dim)
    if distance(A, xp, tol) <= tol.geom_tol:
        raise InvalidSet("probe x must lie outside A")
    fam = Family((A, B))
    px, _ = dykstra_project(fam, xp, tol)
    if distance(plane, px, tol) > 10 * tol.geom_tol:
        raise InvalidSet("projection of x onto A∩B does not lie in the plane")
    # relative-interior margin: the projection must clear the relative
    # boundary of A∩B along every sampled in-plane direction
    dirs = _in_plane_directions(plane, relint_rays)
    margin = min(
        _exit_radius(px, d, (A, B), cap=1e6, tol=tol) for d in dirs
    )
    if not np.isfinite(margin) or margin <= tol.geom_tol:
        raise InvalidSet(
            "projection of x is not in the relative interior of A∩B "
            f"(margin {margin:.3e})"
        )
    xs = symmetric_point(xp, px)
    if distance(B, xs, tol) <= tol.geom_tol:
        raise InvalidSet("reflected point xs lies in B; construction invalid")
    sx = float(_signed_plane_side(plane, xp))
    sxs = float(_signed_plane_side(plane, xs))
    if sx * sxs >= 0:
        raise InvalidSet("x and xs do not lie on opposite sides of the plane")
    return EnlargementPair(
        x=xp,
        px=px,
        xs=xs,
        cone_a=cone_hull(A, xp, tol),
        cone_b=cone_hull(B, xs, tol),
        plane=plane,
    )


def _signed_plane_side(plane: AffineFlat, x) -> float:
    d = as_point(x, dim=plane.dim) - plane.base
    resid = d - plane._onb.T @ (plane._onb @ d)
    n = np.linalg.norm(resid)
    if n == 0:
        return 0.0
    # sign along a fixed normal direction of the flat
    normal = _plane_normal(plane)
    return float(resid @ normal)


def _plane_normal(plane: AffineFlat) -> np.ndarray:
    q = plane._onb
    n = plane.dim
    if q.shape[0] != n - 1:
        raise InvalidSet("signed sides need a flat of codimension one")
    # any unit vector orthogonal to the flat directions
    mat = np.vstack([q, np.zeros((1, n))])
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        resid = e - q.T @ (q @ e)
        if np.linalg.norm(resid) > 1e-8:
            return resid / np.linalg.norm(resid)
    raise InvalidSet("could not build a plane normal")


def bounded_interior_report(
    pair: EnlargementPair,
    ray_samples: int,
    tol: TolerancePolicy = DEFAULT_TOL,
    rng: Optional[np.random.Generator] = None,
    ball_samples: int = 256,
) -> BoundedInteriorReport:
    """Numerical evidence that the two hulls intersect in a bounded set
    with nonempty interior.

    Every sampled in-plane ray from the projection point must leave the
    intersection before the cap (1e6 times the instance diameter); a cap
    hit raises SolverFailure.  The interior certificate bisects on the
    radius of a ball around the projection point whose sampled surface
    points all belong to both cones.
    """
    if ray_samples < 8:
        raise ValueError("need at least 8 ray samples")
    rng = np.random.default_rng(0) if rng is None else rng
    members = (pair.cone_a.realized, pair.cone_b.realized)
    span = np.vstack([pair.cone_a.base.vertices, pair.cone_b.base.vertices])
    diameter = float(
        np.max(np.linalg.norm(span[:, None, :] - span[None, :, :], axis=-1))
    )
    cap = 1e6 * max(diameter, 1.0)

    dirs = _in_plane_directions(pair.plane, ray_samples)
    bound = 0.0
    for d in dirs:
        r = _exit_radius(pair.px, d, members, cap, tol)
        if not np.isfinite(r):
            raise SolverFailure(
                "a sampled ray stayed inside both cones up to the cap; "
                "the intersection is not verifiably bounded",
                achieved=cap,
            )
        bound = max(bound, r)
    # in-plane rays alone cannot see off-plane recession directions, so
    # the boundedness verdict additionally sweeps space directions (they
    # do not enter the reported in-plane radius bound)
    for d in _sphere_directions(pair.px.size, max(ray_samples, 16)):
        if not np.isfinite(_exit_radius(pair.px, d, members, cap, tol)):
            raise SolverFailure(
                "an off-plane ray stayed inside both cones up to the cap; "
                "the intersection is not verifiably bounded",
                achieved=cap,
            )

    n = pair.px.size

    def ball_ok(rho):
        pts = rng.normal(size=(ball_samples, n))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        for p in pair.px + rho * pts:
            for s in members:
                if distance(s, p, tol) > tol.geom_tol * (1 + rho):
                    return False
        return True

    lo, hi = 0.0, max(bound, tol.geom_tol)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if ball_ok(mid):
            lo = mid
        else:
            hi = mid
    interior = lo
    if interior <= tol.geom_tol:
        raise SolverFailure(
            "no interior ball found around the projection point",
            achieved=interior,
        )
    return BoundedInteriorReport(
        bounded_radius_bound=bound,
        interior_ball_radius=interior,
        witness_center=pair.px.copy(),
        rays_sampled=ray_samples,
    )
