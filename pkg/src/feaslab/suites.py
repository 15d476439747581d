"""Seeded property suites shared by the test battery and the CLI.

Each suite runs a fixed number of randomized cases, counts failures
against the stated tolerances and reports the worst witness seen, so a
red run always carries a reproducible counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conehull import bounded_interior_report, build_enlargement, lemma2_margin
from .errors import SolverFailure
from .iteration import (
    ControlSchedule,
    demicontractivity_identity_residual,
    eq5_descent_residual,
    k_to_lambda,
    lambda_to_k,
    projection_algorithm,
)
from .lab import (
    Case3Params,
    lemma4_certificate,
    make_case4_instance,
    regularity_modulus,
    scenario_case1,
    scenario_case2,
    scenario_case3,
    scenario_case4,
)
from .sets import (
    DEFAULT_TOL,
    AffineFlat,
    Ball,
    Box,
    CircularCone,
    Family,
    Halfspace,
    Hyperplane,
    Polytope,
    TolerancePolicy,
    TranslatedCone,
    distance,
    dykstra_distance,
    kolmogorov_margin,
    project,
)

VARIANT_NAMES = (
    "halfspace",
    "hyperplane",
    "ball",
    "box",
    "affine_flat",
    "circular_cone",
    "polytope",
    "translated_cone",
)


@dataclass
class SuiteReport:
    name: str
    cases: int
    failures: int
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return [float(x) for x in v]
            if isinstance(v, (np.floating, np.integer)):
                return float(v)
            return v

        return {
            "suite": self.name,
            "cases": self.cases,
            "failures": self.failures,
            "passed": self.passed,
            "worst": {k: clean(v) for k, v in self.worst.items()},
        }


def random_set(name: str, n: int, rng: np.random.Generator):
    if name == "halfspace":
        return Halfspace(rng.normal(size=n), rng.normal())
    if name == "hyperplane":
        return Hyperplane(rng.normal(size=n), rng.normal())
    if name == "ball":
        return Ball(rng.normal(size=n), rng.uniform(0.1, 2.5))
    if name == "box":
        a, b = rng.normal(size=n), rng.normal(size=n)
        return Box(np.minimum(a, b), np.maximum(a, b))
    if name == "affine_flat":
        k = int(rng.integers(0, n))
        return AffineFlat(rng.normal(size=n), rng.normal(size=(k, n)))
    if name == "circular_cone":
        ax = rng.normal(size=n)
        ax /= np.linalg.norm(ax)
        return CircularCone(rng.normal(size=n), ax, rng.uniform(0.15, 1.4))
    if name == "polytope":
        m = int(rng.integers(1, 9))
        return Polytope(rng.normal(size=(m, n)) * rng.uniform(0.5, 2.0))
    if name == "translated_cone":
        m = int(rng.integers(0, 7))
        return TranslatedCone(rng.normal(size=n), rng.normal(size=(m, n)))
    raise ValueError(name)


def interior_probe(s, n: int, rng: np.random.Generator) -> np.ndarray:
    """A point guaranteed to lie in the set (used as Kolmogorov probe)."""
    if isinstance(s, Halfspace):
        x = rng.normal(size=n)
        excess = float(s.normal @ x) - s.offset
        nn = float(s.normal @ s.normal)
        return x - (max(excess, 0.0) + rng.uniform(0, 1)) * s.normal / nn
    if isinstance(s, Hyperplane):
        x = rng.normal(size=n)
        gap = float(s.normal @ x) - s.offset
        return x - gap * s.normal / float(s.normal @ s.normal)
    if isinstance(s, Ball):
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        return s.center + s.radius * rng.uniform(0, 0.95) * u
    if isinstance(s, Box):
        return rng.uniform(s.lower, s.upper)
    if isinstance(s, AffineFlat):
        k = s._onb.shape[0]
        return s.base + (s._onb.T @ rng.normal(size=k) if k else 0.0)
    if isinstance(s, CircularCone):
        return s.apex + rng.uniform(0, 3) * s.axis
    if isinstance(s, Polytope):
        w = rng.uniform(0, 1, size=s.vertices.shape[0])
        w /= w.sum()
        return s.vertices.T @ w
    if isinstance(s, TranslatedCone):
        m = s.generators.shape[0]
        if m == 0:
            return s.vertex.copy()
        return s.vertex + s.generators.T @ rng.uniform(0, 1.5, size=m)
    raise ValueError(type(s))


def suite_projections(
    seed: int = 0,
    cases_per_variant: int = 1000,
    coherence_probes: int = 100,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> SuiteReport:
    """Idempotence, nonexpansiveness, Kolmogorov margin and variational
    consistency per set variant, plus the Dykstra-vs-oracle coherence
    check on the four scenario families."""
    rng = np.random.default_rng(seed)
    failures = 0
    cases = 0
    worst = {
        "idempotence": 0.0,
        "nonexpansive_excess": 0.0,
        "kolmogorov_margin": np.inf,
        "variational_excess": 0.0,
        "dykstra_oracle_gap": 0.0,
    }
    for name in VARIANT_NAMES:
        for _ in range(cases_per_variant):
            cases += 1
            n = int(rng.integers(2, 6))
            s = random_set(name, n, rng)
            x = rng.normal(size=n) * 3
            y = rng.normal(size=n) * 3
            px = project(s, x, tol)
            py = project(s, y, tol)
            idem = float(np.linalg.norm(project(s, px, tol) - px))
            worst["idempotence"] = max(worst["idempotence"], idem)
            if idem > tol.geom_tol:
                failures += 1
            excess = float(
                np.linalg.norm(px - py) - np.linalg.norm(x - y)
            )
            worst["nonexpansive_excess"] = max(worst["nonexpansive_excess"], excess)
            if excess > 1e-10:
                failures += 1
            probe = interior_probe(s, n, rng)
            margin = kolmogorov_margin(s, x, probe, tol)
            floor = -1e-9 * (1.0 + float(x @ x))
            worst["kolmogorov_margin"] = min(worst["kolmogorov_margin"], margin)
            if margin < floor:
                failures += 1
            var_excess = (
                float((x - px) @ (x - px))
                + float((px - probe) @ (px - probe))
                - float((x - probe) @ (x - probe))
            )
            worst["variational_excess"] = max(worst["variational_excess"], var_excess)
            if var_excess > 1e-9 * (1.0 + float(x @ x)):
                failures += 1

    for scen in _all_scenarios():
        allowance = 10.0 * scen.dykstra_policy.proj_tol
        for _ in range(coherence_probes):
            cases += 1
            probe = scen.probe_sampler(rng)
            gap = abs(
                dykstra_distance(scen.family, probe, scen.dykstra_policy)
                - scen.exact_intersection_distance(probe)
            )
            worst["dykstra_oracle_gap"] = max(worst["dykstra_oracle_gap"], gap)
            if gap > allowance:
                failures += 1
    return SuiteReport("projections", cases, failures, worst)


def _all_scenarios():
    yield scenario_case1()
    yield scenario_case2()
    yield scenario_case3(Case3Params(1.0, 1.0, (1.0, 10.0, 100.0, 1000.0)))
    yield scenario_case4(**make_case4_instance("square"))
    yield scenario_case4(**make_case4_instance("quad"))


def random_common_point_family(rng: np.random.Generator, n: int, n_sets: int):
    """Family of halfspaces, balls and boxes all containing a margin ball
    around a hidden common point; returns (family, witnesses)."""
    z = rng.normal(size=n) * 2
    margin = 0.1
    sets = []
    for _ in range(n_sets):
        kind = rng.integers(0, 3)
        if kind == 0:
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            sets.append(Halfspace(u, float(u @ z) + margin * (1 + rng.uniform(0, 2))))
        elif kind == 1:
            v = rng.normal(size=n)
            sets.append(Ball(z + v, float(np.linalg.norm(v)) + margin * (1 + rng.uniform(0, 2))))
        else:
            lo = z - margin - np.abs(rng.normal(size=n))
            hi = z + margin + np.abs(rng.normal(size=n))
            sets.append(Box(lo, hi))
    u = rng.normal(size=n)
    u /= np.linalg.norm(u)
    witnesses = (z.copy(), z + 0.5 * margin * u)
    return Family(tuple(sets)), witnesses


def suite_fejer(
    seed: int = 0,
    runs: int = 50,
    max_iters: int = 10_000,
    stop_residual: float = 1e-8,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> SuiteReport:
    """Monotonicity of witness distances, per-step descent residuals, the
    telescoped summability bound, remotest dominance and convergence on
    random interior-intersection families."""
    rng = np.random.default_rng(seed)
    failures = 0
    cases = 0
    worst = {
        "fejer_increase": 0.0,
        "eq5_residual": np.inf,
        "summability_excess": 0.0,
        "remotest_dominance_excess": 0.0,
        "unconverged_runs": 0,
    }
    weights = (0.5, 1.0, 1.5)
    for run in range(runs):
        n = int(rng.integers(2, 5))
        family, wits = random_common_point_family(rng, n, int(rng.integers(2, 5)))
        t = weights[run % 3]
        strategy = "remotest" if run % 2 else "cyclic"
        x0 = rng.normal(size=n) * 4
        trace = projection_algorithm(
            family,
            strategy,
            ControlSchedule.constant(t),
            x0,
            max_iters=max_iters,
            stop_residual=stop_residual,
            witnesses=wits,
            tol=tol,
        )
        cases += 1
        if not trace.converged:
            failures += 1
            worst["unconverged_runs"] += 1
        budget = {
            j: float(np.linalg.norm(x0 - w)) ** 2 for j, w in enumerate(wits)
        }
        spent = {j: 0.0 for j in range(len(wits))}
        for a, b in zip(trace.steps, trace.steps[1:]):
            inc = float(np.max(b.fejer_distances - a.fejer_distances))
            worst["fejer_increase"] = max(worst["fejer_increase"], inc)
            if inc > 1e-12:
                failures += 1
            px = project(family.sets[a.chosen_set], a.x, tol)
            for j, w in enumerate(wits):
                r = eq5_descent_residual(a.x, px, w, t)
                scale = 1.0 + float(a.x @ a.x) + float(w @ w) + float(px @ px)
                worst["eq5_residual"] = min(worst["eq5_residual"], r)
                if r < -1e-10 * scale:
                    failures += 1
            spent_step = t * (2.0 - t) * a.residual**2
            for j in spent:
                spent[j] += spent_step
            if strategy == "remotest":
                dom = float(np.max(a.per_set_distance)) - a.residual
                worst["remotest_dominance_excess"] = max(
                    worst["remotest_dominance_excess"], dom
                )
                if dom > 1e-12:
                    failures += 1
        for j in spent:
            excess = spent[j] - budget[j]
            worst["summability_excess"] = max(worst["summability_excess"], excess)
            if excess > 1e-8:
                failures += 1
    return SuiteReport("fejer", cases, failures, worst)


def suite_identity(seed: int = 0, cases: int = 10_000) -> SuiteReport:
    """Algebraic identity residuals and the k/lambda conversion round trip."""
    rng = np.random.default_rng(seed)
    failures = 0
    worst = {"identity_residual_over_scale": 0.0, "roundtrip_error": 0.0}
    for _ in range(cases):
        n = int(rng.integers(1, 9))
        x = rng.normal(size=n) * rng.uniform(0.1, 10)
        txp = rng.normal(size=n) * rng.uniform(0.1, 10)
        xs = rng.normal(size=n) * rng.uniform(0.1, 10)
        k = rng.uniform(-2.0, 1.0)
        resid = demicontractivity_identity_residual(x, txp, xs, k)
        scale = 1.0 + float(x @ x) + float(txp @ txp) + float(xs @ xs)
        ratio = resid / scale
        worst["identity_residual_over_scale"] = max(
            worst["identity_residual_over_scale"], ratio
        )
        if resid > 1e-10 * scale:
            failures += 1
    # exact round trip on a dyadic grid (binary fractions survive the
    # 1-k and 1-2*lambda arithmetic without rounding)
    grid = np.concatenate([np.arange(-32, 17) / 16.0, np.array([1.0, -1.0, 0.0])])
    for k in grid:
        err = abs(lambda_to_k(k_to_lambda(float(k))) - float(k))
        worst["roundtrip_error"] = max(worst["roundtrip_error"], err)
        if err != 0.0:
            failures += 1
    return SuiteReport("identity", cases + grid.size, failures, worst)


def suite_lemma2(seed: int = 0, cases: int = 1000, tol=DEFAULT_TOL) -> SuiteReport:
    """Distance monotonicity along segments into random triangles in R^3."""
    rng = np.random.default_rng(seed)
    failures = 0
    worst = {"margin": np.inf}
    done = 0
    while done < cases:
        A = Polytope(rng.normal(size=(3, 3)) * rng.uniform(0.5, 2.0))
        x = rng.normal(size=3) * 3
        if distance(A, x, tol) <= 10 * tol.geom_tol:
            continue
        w = rng.uniform(0, 1, size=3)
        w /= w.sum()
        d = A.vertices.T @ w
        t = rng.uniform(0.0, 1.0)
        y = x + t * (d - x)
        margin = lemma2_margin(A, x, y, tol)
        scale = 1.0 + float(x @ x)
        worst["margin"] = min(worst["margin"], margin)
        if margin < -1e-9 * scale:
            failures += 1
        done += 1
    return SuiteReport("lemma2", cases, failures, worst)


def suite_lemma3(seed: int = 0, ray_samples: int = 32, tol=DEFAULT_TOL) -> SuiteReport:
    """Bounded-intersection-with-interior evidence on both twin-polytope
    instances."""
    rng = np.random.default_rng(seed)
    failures = 0
    worst = {"interior_ball_radius": np.inf, "bounded_radius_bound": 0.0}
    cases = 0
    for which in ("square", "quad"):
        cases += 1
        inst = make_case4_instance(which)
        scen = scenario_case4(**inst)
        x = scen.params["centroid"] - 0.1 * scen.params["up"]
        try:
            pair = build_enlargement(inst["A"], inst["B"], inst["plane"], x, tol)
            rep = bounded_interior_report(pair, ray_samples, tol, rng)
        except SolverFailure:
            failures += 1
            continue
        worst["interior_ball_radius"] = min(
            worst["interior_ball_radius"], rep.interior_ball_radius
        )
        worst["bounded_radius_bound"] = max(
            worst["bounded_radius_bound"], rep.bounded_radius_bound
        )
        if rep.interior_ball_radius < 1e-3 or not np.isfinite(rep.bounded_radius_bound):
            failures += 1
    return SuiteReport("lemma3", cases, failures, worst)


def suite_lemma4(
    seed: int = 0,
    eps_values=(0.1, 0.01),
    horizon: int = 600,
    tol=DEFAULT_TOL,
) -> SuiteReport:
    """Certificate pipeline on both instances for each epsilon."""
    rng = np.random.default_rng(seed)
    failures = 0
    cases = 0
    worst = {"tail_index": 0, "chain_excess": -np.inf}
    for which in ("square", "quad"):
        scen = scenario_case4(**make_case4_instance(which))
        for eps in eps_values:
            cases += 1
            try:
                cert = lemma4_certificate(scen, eps, horizon, tol, rng)
            except SolverFailure:
                failures += 1
                continue
            worst["tail_index"] = max(worst["tail_index"], cert.tail_index)
            chain = cert.base_distance_bound - (
                cert.enlarged_distance_bound + 0.5 * eps
            )
            worst["chain_excess"] = max(worst["chain_excess"], chain)
            if cert.base_distance_bound > eps + tol.geom_tol or chain > 1e-9:
                failures += 1
    return SuiteReport("lemma4", cases, failures, worst)


def suite_modulus(seed: int = 0, samples: int = 60, tol=DEFAULT_TOL) -> SuiteReport:
    """Positive empirical regularity modulus on bounded regions."""
    rng = np.random.default_rng(seed)
    failures = 0
    cases = 0
    worst = {"min_delta_hat": np.inf}
    lens = scenario_case1()
    region = Ball(lens.params["geometry"].inner_center, 5.0)
    for pt in regularity_modulus(
        lens.family, region, (0.1, 0.01), samples, rng,
        oracle=lens.exact_intersection_distance, tol=tol,
    ):
        cases += 1
        worst["min_delta_hat"] = min(worst["min_delta_hat"], pt.delta_hat)
        if pt.delta_hat <= 0:
            failures += 1
    tangent = scenario_case2()
    region2 = Ball(np.zeros(3), 5.0)
    for pt in regularity_modulus(
        tangent.family, region2, (0.1,), samples, rng,
        oracle=tangent.exact_intersection_distance, tol=tol,
    ):
        cases += 1
        worst["min_delta_hat"] = min(worst["min_delta_hat"], pt.delta_hat)
        if pt.delta_hat <= 0:
            failures += 1
    return SuiteReport("modulus", cases, failures, worst)


SUITES = {
    "projections": suite_projections,
    "fejer": suite_fejer,
    "identity": suite_identity,
    "lemma2": suite_lemma2,
    "lemma3": suite_lemma3,
    "lemma4": suite_lemma4,
    "modulus": suite_modulus,
}


def run_suite(name: str, seed: int = 0) -> list:
    """Run one suite (or 'all'); returns a list of SuiteReport."""
    if name == "all":
        return [fn(seed=seed) for fn in SUITES.values()]
    if name not in SUITES:
        raise KeyError(name)
    return [SUITES[name](seed=seed)]
