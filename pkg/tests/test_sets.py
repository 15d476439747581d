import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feaslab import (
    AffineFlat,
    Ball,
    Box,
    CircularCone,
    DimensionMismatch,
    Family,
    Halfspace,
    Hyperplane,
    InvalidSet,
    Polytope,
    SolverFailure,
    TolerancePolicy,
    TranslatedCone,
    contains,
    distance,
    dykstra_distance,
    dykstra_project,
    family_from_dict,
    family_to_dict,
    kolmogorov_margin,
    project,
    set_from_dict,
    set_to_dict,
)
from feaslab.suites import VARIANT_NAMES, interior_probe, random_set

from oracles import grid_simplex_projection, lens_distance_scan, qp_cone_projection, qp_polytope_projection


def test_halfspace_projection():
    s = Halfspace([1.0, 0, 0], 0.0)
    assert np.allclose(project(s, [2.0, 0, 0]), [0, 0, 0])
    # interior points are fixed
    assert np.allclose(project(s, [-1.0, 3, 0]), [-1, 3, 0])


def test_ball_radial_projection():
    s = Ball([0.0, 0], 1.0)
    assert np.allclose(project(s, [-3.0, 0]), [-1, 0])
    assert distance(s, [0.0, 0]) == 0.0


def test_hyperplane_distance():
    s = Hyperplane([0.0, 1.0], 2.0)
    assert distance(s, [5.0, 0]) == pytest.approx(2.0, abs=1e-14)


def test_circular_cone_symmetric_45deg():
    s = CircularCone([0.0, 0, 0], [0.0, 0, 1], np.pi / 4)
    assert np.allclose(project(s, [1.0, 0, 0]), [0.5, 0, 0.5], atol=1e-14)


def test_circular_cone_opposite_nappe():
    s = CircularCone([0.0, 0, 0], [0.0, 0, 1], np.pi / 4)
    assert not contains(s, [1.0, 0, -2.0])
    # deep in the polar cone projects to the apex
    assert np.allclose(project(s, [0.0, 0, -5.0]), [0, 0, 0])


def test_box_membership():
    s = Box([0.0, 0], [1.0, 1])
    assert contains(s, [0.5, 0.5])
    assert np.allclose(project(s, [2.0, -1.0]), [1.0, 0.0])


def test_halfspace_membership_slack():
    s = Halfspace([1.0, 0], 0.0)
    tol = TolerancePolicy(proj_tol=1e-12, geom_tol=1e-9)
    assert contains(s, [1e-12, 0.0], tol)
    assert not contains(s, [1e-6, 0.0], tol)


def test_polytope_triangle_matches_grid_oracle():
    # frozen via the brute-force barycentric grid oracle
    s = Polytope([[0.0, 0], [1, 0], [0, 1]])
    p = project(s, [1.0, 1.0])
    assert np.allclose(p, [0.5, 0.5], atol=1e-10)
    oracle = grid_simplex_projection(s.vertices, np.array([1.0, 1.0]))
    assert np.linalg.norm(p - oracle) < 5e-3  # grid resolution bound


def test_segment_distance():
    s = Polytope([[0.0, 0], [1, 0]])
    assert distance(s, [2.0, 1.0]) == pytest.approx(np.sqrt(2), abs=1e-12)


def test_polytope_projection_vs_qp():
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 9))
        s = Polytope(rng.normal(size=(m, n)))
        x = rng.normal(size=n) * 2
        d_own = distance(s, x)
        d_qp = np.linalg.norm(x - qp_polytope_projection(s.vertices, x))
        assert d_own <= d_qp + 1e-7
        assert d_own >= d_qp - 1e-7


def test_translated_cone_projection_vs_qp():
    rng = np.random.default_rng(1)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(0, 7))
        s = TranslatedCone(rng.normal(size=n), rng.normal(size=(m, n)))
        x = rng.normal(size=n) * 3
        d_own = distance(s, x)
        d_qp = np.linalg.norm(x - qp_cone_projection(s.vertex, s.generators, x))
        assert abs(d_own - d_qp) < 1e-7


def test_degenerate_singletons():
    assert np.allclose(project(Ball([1.0, 2], 0.0), [5.0, 5]), [1, 2])
    assert np.allclose(project(Polytope([[3.0, 4]]), [0.0, 0]), [3, 4])
    assert np.allclose(
        project(TranslatedCone([1.0, 1], np.zeros((0, 2))), [0.0, 0]), [1, 1]
    )


def test_affine_flat_projection():
    s = AffineFlat([0.0, 0, 1], [[1.0, 0, 0], [0.0, 1, 0]])
    assert np.allclose(project(s, [2.0, 3, 5]), [2, 3, 1])
    # dependent basis rows are tolerated
    s2 = AffineFlat([0.0, 0, 0], [[1.0, 0, 0], [2.0, 0, 0]])
    assert np.allclose(project(s2, [1.0, 1, 1]), [1, 0, 0])


def test_invalid_sets_rejected():
    with pytest.raises(InvalidSet):
        Halfspace([0.0, 0], 1.0)
    with pytest.raises(InvalidSet):
        Ball([0.0, 0], -1.0)
    with pytest.raises(InvalidSet):
        Box([1.0, 0], [0.0, 1])
    with pytest.raises(InvalidSet):
        CircularCone([0.0, 0, 0], [0.0, 0, 2.0], 0.5)
    with pytest.raises(InvalidSet):
        CircularCone([0.0, 0, 0], [0.0, 0, 1.0], np.pi / 2)
    with pytest.raises(InvalidSet):
        Ball([np.nan, 0.0], 1.0)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        project(Ball([0.0, 0], 1.0), [1.0, 2, 3])
    with pytest.raises(DimensionMismatch):
        Family((Ball([0.0, 0], 1.0), Ball([0.0, 0, 0], 1.0)))


def test_kolmogorov_margin_examples():
    ball = Ball([0.0, 0], 1.0)
    assert kolmogorov_margin(ball, [2.0, 0], [0.0, 0]) == pytest.approx(1.0, abs=1e-12)
    # x already in the set: P(x) = x, margin 0
    assert kolmogorov_margin(ball, [0.3, 0], [-0.5, 0]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        kolmogorov_margin(ball, [2.0, 0], [5.0, 0])


def test_kolmogorov_margin_polytope_probes():
    rng = np.random.default_rng(2)
    tri = Polytope(rng.normal(size=(3, 3)))
    x = rng.normal(size=3) * 3
    for _ in range(100):
        w = rng.uniform(0, 1, size=3)
        w /= w.sum()
        probe = tri.vertices.T @ w
        assert kolmogorov_margin(tri, x, probe) >= -1e-9 * (1 + x @ x)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=2, max_size=4),
    st.lists(st.floats(-50, 50), min_size=2, max_size=4),
)
def test_projection_nonexpansive_hypothesis(xl, yl):
    n = min(len(xl), len(yl))
    x, y = np.array(xl[:n]), np.array(yl[:n])
    ball = Ball(np.zeros(n), 1.5)
    half = Halfspace(np.ones(n), 0.5)
    for s in (ball, half):
        px, py = project(s, x), project(s, y)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-10


def test_projection_properties_all_variants():
    rng = np.random.default_rng(3)
    for name in VARIANT_NAMES:
        for _ in range(60):
            n = int(rng.integers(2, 6))
            s = random_set(name, n, rng)
            x = rng.normal(size=n) * 3
            px = project(s, x)
            assert np.linalg.norm(project(s, px) - px) <= 1e-8
            probe = interior_probe(s, n, rng)
            assert contains(s, probe)
            assert kolmogorov_margin(s, x, probe) >= -1e-9 * (1 + x @ x)


def test_dykstra_two_halfspaces():
    fam = Family((Halfspace([1.0, 0], 0.0), Halfspace([0.0, 1], 0.0)))
    assert dykstra_distance(fam, [1.0, 1.0]) == pytest.approx(np.sqrt(2), abs=1e-9)


def test_dykstra_single_set_degenerates():
    fam = Family((Ball([0.0, 0], 1.0),))
    assert dykstra_distance(fam, [3.0, 0]) == pytest.approx(2.0, abs=1e-12)


def test_dykstra_two_balls_vs_scan_oracle():
    fam = Family((Ball([0.0, 0], 1.0), Ball([1.0, 0], 1.0)))
    got = dykstra_distance(fam, [0.5, 2.0])
    oracle = lens_distance_scan([0, 0, 0], 1.0, [1, 0, 0], 1.0, [0.5, 2.0, 0.0])
    assert got == pytest.approx(oracle, abs=1e-6)
    assert got == pytest.approx(2 - np.sqrt(3) / 2, abs=1e-8)


def test_dykstra_projection_is_nearest_point():
    fam = Family((Halfspace([1.0, 0], 0.0), Ball([0.0, 0], 2.0)))
    x = np.array([3.0, 1.5])
    y, info = dykstra_project(fam, x)
    assert contains(fam.sets[0], y) and contains(fam.sets[1], y)
    assert info["displacement"] <= 1e-10


def test_dykstra_nonconvergence_reports_displacement():
    # disjoint balls: the cycle displacement stays bounded away from zero
    fam = Family((Ball([0.0, 0], 1.0), Ball([10.0, 0], 1.0)))
    tol = TolerancePolicy(proj_tol=1e-10, geom_tol=1e-8, max_inner_iters=50)
    with pytest.raises(SolverFailure) as exc:
        dykstra_distance(fam, [5.0, 5.0], tol)
    assert exc.value.achieved is not None


def test_serialization_round_trip():
    rng = np.random.default_rng(4)
    for name in VARIANT_NAMES:
        s = random_set(name, 3, rng)
        d = set_to_dict(s)
        s2 = set_from_dict(json.loads(json.dumps(d)))
        x = rng.normal(size=3)
        assert np.allclose(project(s, x), project(s2, x), atol=1e-12)


def test_serialization_rejects_bad_input():
    with pytest.raises(InvalidSet, match='"kind"'):
        set_from_dict({"normal": [1, 0], "offset": 0.0})
    with pytest.raises(InvalidSet, match="unknown set kind"):
        set_from_dict({"kind": "banana"})
    with pytest.raises(InvalidSet, match="unknown field"):
        set_from_dict(
            {"kind": "ball", "center": [0, 0], "radius": 1.0, "color": "red"}
        )
    with pytest.raises(InvalidSet, match="schemaVersion"):
        set_from_dict(
            {"schemaVersion": 2, "kind": "ball", "center": [0, 0], "radius": 1.0}
        )


def test_family_serialization():
    fam = Family((Ball([0.0, 0], 1.0), Halfspace([1.0, 0], 0.0)))
    fam2 = family_from_dict(family_to_dict(fam))
    assert len(fam2.sets) == 2
    with pytest.raises(InvalidSet):
        family_from_dict({"sets": []})


def test_tolerance_policy_validation():
    with pytest.raises(InvalidSet):
        TolerancePolicy(proj_tol=1e-6, geom_tol=1e-9)
    with pytest.raises(InvalidSet):
        TolerancePolicy(max_inner_iters=0)


def test_polytope_solver_cap_reports_achieved_residual():
    # one major iteration is not enough to bring in the second vertex
    seg = Polytope([[0.0, 0], [1.0, 0]])
    tol = TolerancePolicy(proj_tol=1e-10, geom_tol=1e-8, max_inner_iters=1)
    with pytest.raises(SolverFailure) as exc:
        project(seg, [0.5, 1.0], tol)
    assert exc.value.achieved is not None
