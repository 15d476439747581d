import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feaslab import (
    AffineFlat,
    Ball,
    InvalidSet,
    Polytope,
    SolverFailure,
    contains,
    distance,
    project,
)
from feaslab.conehull import (
    BoundedInteriorReport,
    EnlargementPair,
    bounded_interior_report,
    build_enlargement,
    cone_hull,
    lemma2_margin,
    ray_min_parameter,
    sup_side_point,
    symmetric_point,
)
from feaslab.lab import make_case4_instance

from oracles import golden_section


def _square_instance():
    inst = make_case4_instance("square")
    return inst["A"], inst["B"], inst["plane"]


def test_cone_hull_wedge():
    base = Polytope([[1.0, 0], [1.0, 1]])
    hull = cone_hull(base, [0.0, 0])
    assert np.allclose(hull.realized.generators, [[1, 0], [1, 1]])
    # base points stay inside the realized cone
    for v in base.vertices:
        assert contains(hull.realized, v)
    assert contains(hull.realized, [2.0, 1.0])
    assert not contains(hull.realized, [-1.0, 0.0])


def test_cone_hull_single_point_is_ray():
    hull = cone_hull(Polytope([[2.0, 2.0]]), [1.0, 1.0])
    assert contains(hull.realized, [3.0, 3.0])
    assert not contains(hull.realized, [0.0, 0.0])


def test_cone_hull_square_base_3d():
    base = Polytope(
        [[1.0, 1, 1], [1, -1, 1], [-1, -1, 1], [-1, 1, 1]]
    )
    hull = cone_hull(base, [0.0, 0, 0])
    assert contains(hull.realized, [0.0, 0, 2.0])
    assert not contains(hull.realized, [2.0, 2, 1.0])


def test_cone_hull_vertex_inside_base_rejected():
    with pytest.raises(InvalidSet):
        cone_hull(Polytope([[0.0, 0], [2.0, 0], [0.0, 2]]), [0.5, 0.5])


def test_ray_min_parameter_orthogonal():
    t = ray_min_parameter([1.0, 0], [0.0, 1])
    assert t == pytest.approx(0.5, abs=1e-15)
    p = np.array([1.0, 0]) + t * (np.array([0.0, 1]) - np.array([1.0, 0]))
    assert np.allclose(p, [0.5, 0.5])


def test_ray_min_parameter_collinear_through_origin():
    x = np.array([1.0, 0, 0])
    assert ray_min_parameter(x, -x) == pytest.approx(0.5, abs=1e-15)


def test_ray_min_parameter_clamps_at_zero():
    # moving from x toward d only increases the norm
    assert ray_min_parameter([1.0, 0], [2.0, 0]) == 0.0


def test_ray_min_parameter_requires_distinct_points():
    with pytest.raises(ValueError):
        ray_min_parameter([1.0, 0], [1.0, 0])


def test_ray_min_parameter_vs_golden_section():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.normal(size=3)
        d = rng.normal(size=3)
        if np.linalg.norm(d - x) < 1e-6:
            continue
        t = ray_min_parameter(x, d)

        def f(s):
            return float(np.linalg.norm(x + s * (d - x)))

        t_star, _ = golden_section(f, 0.0, max(4.0, 3 * t + 1))
        assert abs(f(t) - f(t_star)) <= 1e-9


def test_ray_min_parameter_origin_shift():
    x, d, o = np.array([1.0, 0]), np.array([0.0, 1]), np.array([0.3, 0.3])
    t = ray_min_parameter(x, d, origin=o)

    def f(s):
        return float(np.linalg.norm(x + s * (d - x) - o))

    t_star, _ = golden_section(f, 0.0, 4.0)
    assert abs(f(t) - f(t_star)) <= 1e-9


def test_ray_min_parameter_optimality_property():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x = rng.normal(size=3)
        d = rng.normal(size=3)
        if np.linalg.norm(d - x) < 1e-9:
            continue
        t = ray_min_parameter(x, d)
        base = np.linalg.norm(x + t * (d - x))
        diff = d - x
        samples = rng.uniform(0, 3, size=100)
        vals = np.linalg.norm(x[None, :] + samples[:, None] * diff[None, :], axis=1)
        assert np.all(base <= vals + 1e-12)


def test_sup_side_point_endpoints():
    base = Polytope([[1.0, 0], [1.0, 1]])
    hull = cone_hull(base, [2.0, 2.0])
    d = np.array([1.0, 0.5])
    assert np.allclose(sup_side_point(hull, d, 0.0), hull.vertex)
    t_d = ray_min_parameter(hull.vertex, d)
    assert t_d >= 1.0
    assert np.allclose(sup_side_point(hull, d, 1.0), d)
    p = sup_side_point(hull, d, t_d)
    assert contains(hull.realized, p)
    # the cap point minimizes the norm along the ray
    for s in np.linspace(0, t_d, 17):
        q = hull.vertex + s * (d - hull.vertex)
        assert np.linalg.norm(p) <= np.linalg.norm(q) + 1e-12


def test_sup_side_point_vertex_at_origin_degenerates():
    # with the default origin at the vertex itself, the minimizing ray
    # parameter is zero and the capped side collapses to the vertex
    base = Polytope([[1.0, 0], [1.0, 1]])
    hull = cone_hull(base, [0.0, 0])
    d = np.array([1.0, 0.5])
    t_d = ray_min_parameter(hull.vertex, d)
    assert t_d == 0.0
    p = sup_side_point(hull, d, t_d)
    assert np.allclose(p, hull.vertex)
    assert contains(hull.realized, p)


def test_sup_side_point_validation():
    base = Polytope([[1.0, 0], [1.0, 1]])
    hull = cone_hull(base, [2.0, 2.0])
    with pytest.raises(ValueError):
        sup_side_point(hull, [5.0, 5.0], 0.1)  # d not in base
    t_d = ray_min_parameter(hull.vertex, [1.0, 0.5])
    with pytest.raises(ValueError):
        sup_side_point(hull, [1.0, 0.5], t_d + 1.0)


def test_symmetric_point_examples():
    assert np.allclose(symmetric_point([1.0, 2, 3], [0.0, 0, 0]), [-1, -2, -3])
    assert np.allclose(symmetric_point([1.0, 1], [1.0, 1]), [1, 1])
    xs = symmetric_point([0.0, 0, 1], [0.0, 0, 0])
    assert np.allclose(xs, [0, 0, -1])
    assert np.sign(xs[2]) == -np.sign(1.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(-(2**30), 2**30), min_size=3, max_size=3),
    st.lists(st.integers(-(2**30), 2**30), min_size=3, max_size=3),
)
def test_symmetric_point_involution_exact_on_integers(xl, pl):
    # integer coordinates keep every double operation exact
    x, p = np.array(xl, float), np.array(pl, float)
    assert np.array_equal(symmetric_point(symmetric_point(x, p), p), x)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
    st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
)
def test_symmetric_point_involution_float(xl, pl):
    x, p = np.array(xl), np.array(pl)
    back = symmetric_point(symmetric_point(x, p), p)
    scale = 1.0 + np.max(np.abs(x)) + np.max(np.abs(p))
    assert np.all(np.abs(back - x) <= 1e-15 * scale)


def test_symmetric_point_midpoint():
    rng = np.random.default_rng(2)
    for _ in range(100):
        x, p = rng.normal(size=3), rng.normal(size=3)
        xs = symmetric_point(x, p)
        assert np.allclose(0.5 * (x + xs), p, atol=1e-12)


def test_lemma2_margin_endpoints():
    rng = np.random.default_rng(3)
    A = Polytope(rng.normal(size=(3, 3)))
    x = rng.normal(size=3) + np.array([5.0, 0, 0])
    assert lemma2_margin(A, x, x) == pytest.approx(0.0, abs=1e-12)
    d = A.vertices.mean(axis=0)
    m = lemma2_margin(A, x, d)
    assert m == pytest.approx(distance(A, x), abs=1e-9)
    assert m >= 0


def test_build_enlargement_square_instance():
    A, B, plane = _square_instance()
    x = np.array([0.0, 0, -0.1])
    pair = build_enlargement(A, B, plane, x)
    assert np.allclose(pair.px, [0, 0, 0], atol=1e-7)
    assert np.allclose(pair.xs, [0.0, 0, 0.1], atol=1e-7)
    assert np.allclose(0.5 * (pair.x + pair.xs), pair.px, atol=1e-7)
    # xs is outside B, x outside A
    assert distance(B, pair.xs) > 1e-4
    assert distance(A, pair.x) > 1e-4
    # the enlargements contain their bases
    for v in A.vertices:
        assert contains(pair.cone_a.realized, v)
    for v in B.vertices:
        assert contains(pair.cone_b.realized, v)


def test_build_enlargement_rejects_x_inside_A():
    A, B, plane = _square_instance()
    with pytest.raises(InvalidSet):
        build_enlargement(A, B, plane, [0.0, 0, 0.1])


def test_build_enlargement_rejects_boundary_projection():
    A, B, plane = _square_instance()
    # below an edge midpoint: the projection lands on the relative boundary
    with pytest.raises(InvalidSet):
        build_enlargement(A, B, plane, [1.0, 0, -0.1])


def test_enlargement_shrinking_probe():
    A, B, plane = _square_instance()
    h = 0.2
    for _ in range(4):
        pair = build_enlargement(A, B, plane, [0.0, 0, -h])
        assert np.linalg.norm(pair.x - pair.xs) == pytest.approx(
            2 * np.linalg.norm(pair.x - pair.px), abs=1e-8
        )
        h /= 2


def test_bounded_interior_report_square():
    A, B, plane = _square_instance()
    pair = build_enlargement(A, B, plane, [0.0, 0, -0.1])
    rng = np.random.default_rng(7)
    rep = bounded_interior_report(pair, 32, rng=rng)
    assert rep.rays_sampled == 32
    assert rep.interior_ball_radius >= 1e-3
    assert np.isfinite(rep.bounded_radius_bound)
    # in-plane rays leave the intersection at the shared square, whose
    # circumradius is sqrt(2)
    assert rep.bounded_radius_bound == pytest.approx(np.sqrt(2), abs=1e-4)
    # Monte Carlo confirmation at half the certified radius
    pts = rng.normal(size=(1000, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    for p in pair.px + 0.5 * rep.interior_ball_radius * pts:
        assert contains(pair.cone_a.realized, p)
        assert contains(pair.cone_b.realized, p)


def test_bounded_interior_report_ray_count_validation():
    A, B, plane = _square_instance()
    pair = build_enlargement(A, B, plane, [0.0, 0, -0.1])
    with pytest.raises(ValueError):
        bounded_interior_report(pair, 4)


def test_bounded_interior_cap_hit_on_unbounded_pair():
    # both hulls open upward: their intersection is unbounded, which the
    # ray sweep must flag instead of truncating silently
    A, B, plane = _square_instance()
    pair_ok = build_enlargement(A, B, plane, [0.0, 0, -0.1])
    bogus = EnlargementPair(
        x=pair_ok.x,
        px=pair_ok.px,
        xs=pair_ok.xs,
        cone_a=pair_ok.cone_a,
        cone_b=pair_ok.cone_a,  # duplicated upward cone
        plane=plane,
    )
    with pytest.raises(SolverFailure):
        bounded_interior_report(bogus, 8, rng=np.random.default_rng(0))


def test_bounded_radius_trend_as_probe_approaches():
    A, B, plane = _square_instance()
    bounds = []
    for h in (0.4, 0.2, 0.1, 0.05):
        pair = build_enlargement(A, B, plane, [0.0, 0, -h])
        rep = bounded_interior_report(pair, 16, rng=np.random.default_rng(1))
        bounds.append(rep.bounded_radius_bound)
    diam = 2 * np.sqrt(2)
    for a, b in zip(bounds, bounds[1:]):
        assert b <= a + 1e-6
    assert bounds[-1] <= diam + 1e-6
