"""Relaxed projection iterations, control schedules and the
demicontractivity calculus.

The driver runs x_{k+1} = (1 - t_k) x_k + t_k P(x_k) where P projects
onto the set picked by the strategy (cyclic sweep or remotest set), and,
when witness points of the intersection are registered, records their
distances so monotonicity along the run can be audited afterwards.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidSet
from .sets import (
    DEFAULT_TOL,
    ConvexSet,
    Family,
    TolerancePolicy,
    as_point,
    distance,
    dykstra_distance,
    project,
)

TIE_SLACK = 1e-12  # equality slack for least-index argmax tie-breaking


# ---------------------------------------------------------------------------
# control schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlSchedule:
    """Relaxation weights t_k.

    kind "constant" uses params[0] for every step, "krasnoselskii" is the
    fixed midpoint weight 1/2, and "cycle" repeats the params tuple.
    """

    kind: str
    params: tuple = ()

    @staticmethod
    def constant(t: float) -> "ControlSchedule":
        return ControlSchedule("constant", (float(t),))

    @staticmethod
    def krasnoselskii() -> "ControlSchedule":
        return ControlSchedule("krasnoselskii", ())

    @staticmethod
    def cycle(values: Sequence[float]) -> "ControlSchedule":
        vals = tuple(float(v) for v in values)
        if not vals:
            raise InvalidSet("cycle schedule needs at least one weight")
        return ControlSchedule("cycle", vals)

    def value(self, k: int) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "krasnoselskii":
            return 0.5
        if self.kind == "cycle":
            return self.params[k % len(self.params)]
        raise InvalidSet(f"unknown schedule kind {self.kind!r}")

    def check_open_range(self, lo: float, hi: float):
        """All weights must lie strictly between lo and hi."""
        vals = self.params if self.kind != "krasnoselskii" else (0.5,)
        for t in vals:
            if not (lo < t < hi):
                raise InvalidSet(
                    f"schedule weight {t} outside the open range ({lo}, {hi})"
                )

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant t={self.params[0]}"
        if self.kind == "krasnoselskii":
            return "krasnoselskii t=1/2"
        return "cycle " + ",".join(repr(v) for v in self.params)


def mann_step(x, tx, t: float) -> np.ndarray:
    """(1 - t) x + t Tx for a weight 0 < t < 2."""
    if not (0.0 < t < 2.0):
        raise InvalidSet(f"relaxation weight t={t} outside (0, 2)")
    xp = as_point(x)
    txp = as_point(tx, dim=xp.size)
    return (1.0 - t) * xp + t * txp


# ---------------------------------------------------------------------------
# strategies and the iteration driver
# ---------------------------------------------------------------------------

STRATEGIES = ("cyclic", "remotest")


def choose_index(strategy: str, k: int, dists: np.ndarray) -> int:
    if strategy == "cyclic":
        return k % dists.size
    if strategy == "remotest":
        # least index attaining the maximum distance, with equality slack
        best = float(np.max(dists))
        return int(np.flatnonzero(dists >= best - TIE_SLACK)[0])
    raise InvalidSet(f"unknown strategy {strategy!r}")


@dataclass(frozen=True)
class IterationStep:
    k: int
    x: np.ndarray
    chosen_set: int
    per_set_distance: np.ndarray
    residual: float
    intersection_distance: Optional[float]
    fejer_distances: np.ndarray


@dataclass
class IterationTrace:
    steps: list
    converged: bool
    stop_residual: float
    strategy: str
    schedule: str
    witnesses: np.ndarray  # (m, n)

    @property
    def final_point(self) -> np.ndarray:
        return self.steps[-1].x

    def residuals(self) -> np.ndarray:
        return np.array([s.residual for s in self.steps])

    def max_set_distances(self) -> np.ndarray:
        return np.array([float(np.max(s.per_set_distance)) for s in self.steps])

    def intersection_distances(self) -> Optional[np.ndarray]:
        vals = [s.intersection_distance for s in self.steps]
        if any(v is None for v in vals):
            return None
        return np.array(vals)

    def to_csv(self, path):
        n_sets = self.steps[0].per_set_distance.size
        n_wit = self.steps[0].fejer_distances.size
        header = (
            ["k", "chosenSet", "residual"]
            + [f"d_{i + 1}" for i in range(n_sets)]
            + ["d_intersection"]
            + [f"fejer_{j + 1}" for j in range(n_wit)]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for s in self.steps:
                row = [s.k, s.chosen_set, repr(s.residual)]
                row += [repr(float(v)) for v in s.per_set_distance]
                row += [
                    "" if s.intersection_distance is None
                    else repr(float(s.intersection_distance))
                ]
                row += [repr(float(v)) for v in s.fejer_distances]
                w.writerow(row)

    def to_json_dict(self, include_steps: bool = False) -> dict:
        out = {
            "schemaVersion": 1,
            "converged": self.converged,
            "stopResidual": self.stop_residual,
            "strategy": self.strategy,
            "schedule": self.schedule,
            "iterations": len(self.steps) - 1,
            "finalResidual": float(np.max(self.steps[-1].per_set_distance)),
            "finalPoint": [float(v) for v in self.final_point],
        }
        if include_steps:
            out["steps"] = [
                {
                    "k": s.k,
                    "x": [float(v) for v in s.x],
                    "chosenSet": s.chosen_set,
                    "perSetDistance": [float(v) for v in s.per_set_distance],
                    "residual": s.residual,
                    "intersectionDistance": s.intersection_distance,
                    "fejerDistances": [float(v) for v in s.fejer_distances],
                }
                for s in self.steps
            ]
        return out


def projection_algorithm(
    family: Family,
    strategy: str,
    schedule: ControlSchedule,
    x0,
    max_iters: int = 10_000,
    stop_residual: float = 1e-8,
    witnesses: Sequence = (),
    tol: TolerancePolicy = DEFAULT_TOL,
    record_intersection: bool = False,
) -> IterationTrace:
    """Run the relaxed projection iteration until the largest per-set
    distance drops below stop_residual (or max_iters is reached).

    Witness points must belong to every set of the family; their
    distances to the iterates are recorded for monotonicity audits.
    ``record_intersection`` additionally evaluates the family's
    intersection-distance oracle (or Dykstra) at every step.
    """
    if strategy not in STRATEGIES:
        raise InvalidSet(f"unknown strategy {strategy!r}; use one of {STRATEGIES}")
    schedule.check_open_range(0.0, 2.0)
    x = as_point(x0, dim=family.dim)
    wit = [as_point(w, dim=family.dim) for w in witnesses]
    for w in wit:
        for i, s in enumerate(family.sets):
            if distance(s, w, tol) > tol.geom_tol:
                raise ValueError(
                    f"witness {w.tolist()} is not in family set {i} "
                    "(not a common point)"
                )
    wit_arr = np.array(wit) if wit else np.zeros((0, family.dim))

    def isect(p):
        if not record_intersection:
            return None
        if family.intersection_oracle is not None:
            return float(family.intersection_oracle(p))
        return dykstra_distance(family, p, tol)

    steps = []
    converged = False
    for k in range(max_iters + 1):
        dists = family.per_set_distances(x, tol)
        chosen = choose_index(strategy, k, dists)
        px = project(family.sets[chosen], x, tol)
        residual = float(np.linalg.norm(x - px))
        fejer = (
            np.linalg.norm(wit_arr - x, axis=1) if wit else np.zeros(0)
        )
        steps.append(
            IterationStep(
                k=k,
                x=x.copy(),
                chosen_set=chosen,
                per_set_distance=dists,
                residual=residual,
                intersection_distance=isect(x),
                fejer_distances=fejer,
            )
        )
        if float(np.max(dists)) <= stop_residual:
            converged = True
            break
        if k == max_iters:
            break
        x = mann_step(x, px, schedule.value(k))

    return IterationTrace(
        steps=steps,
        converged=converged,
        stop_residual=stop_residual,
        strategy=strategy,
        schedule=schedule.describe(),
        witnesses=wit_arr,
    )


# ---------------------------------------------------------------------------
# descent and demicontractivity identities
# ---------------------------------------------------------------------------


def eq5_descent_residual(x, tx, y, t: float) -> float:
    """||x-y||^2 - t(2-t)||x-Tx||^2 - ||x_t - y||^2 for x_t = mann_step.

    Nonnegative (up to roundoff) whenever Tx is a metric projection of x
    onto a convex set containing y; equals 2 t <Tx - y, x - Tx>.
    """
    xp = as_point(x)
    txp = as_point(tx, dim=xp.size)
    yp = as_point(y, dim=xp.size)
    xt = mann_step(xp, txp, t)
    lhs = float((xp - yp) @ (xp - yp))
    move = float((xp - txp) @ (xp - txp))
    after = float((xt - yp) @ (xt - yp))
    return lhs - t * (2.0 - t) * move - after


def demicontractivity_identity_residual(x, tx, xstar, k: float) -> float:
    """|lhs - rhs| of the polarization identity

        ||x-x*||^2 + k ||x-Tx||^2 - ||Tx-x*||^2
            = 2 <x-x*, x-Tx> - (1-k) ||x-Tx||^2
    """
    xp = as_point(x)
    txp = as_point(tx, dim=xp.size)
    xsp = as_point(xstar, dim=xp.size)
    move = xp - txp
    lhs = (
        float((xp - xsp) @ (xp - xsp))
        + k * float(move @ move)
        - float((txp - xsp) @ (txp - xsp))
    )
    rhs = 2.0 * float((xp - xsp) @ move) - (1.0 - k) * float(move @ move)
    return abs(lhs - rhs)


def k_to_lambda(k: float) -> float:
    """lambda = (1 - k) / 2."""
    return (1.0 - k) / 2.0


def lambda_to_k(lam: float) -> float:
    """k = 1 - 2 lambda."""
    return 1.0 - 2.0 * lam


# ---------------------------------------------------------------------------
# mapping specifications and the demicontractivity constant estimator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SetProjectionMap:
    """T(x) = projection onto a single convex set."""

    set_: ConvexSet

    def __call__(self, x, tol=DEFAULT_TOL):
        return project(self.set_, x, tol)


@dataclass(frozen=True, eq=False)
class RemotestProjectionMap:
    """T(x) = projection onto the remotest set of a family."""

    family: Family

    def __call__(self, x, tol=DEFAULT_TOL):
        p = as_point(x, dim=self.family.dim)
        dists = self.family.per_set_distances(p, tol)
        i = choose_index("remotest", 0, dists)
        return project(self.family.sets[i], p, tol)


@dataclass(frozen=True, eq=False)
class RelaxedMap:
    """T_t(x) = (1-t) x + t T(x) over a base mapping."""

    base: object
    t: float

    def __call__(self, x, tol=DEFAULT_TOL):
        return mann_step(x, self.base(x, tol), self.t)


TOY_MAPS = {
    "identity": lambda x: x,
    "negate": lambda x: -x,
    "halve": lambda x: 0.5 * x,
}


@dataclass(frozen=True)
class ToyMap:
    """Named pointwise map from the closed toy registry."""

    name: str

    def __post_init__(self):
        if self.name not in TOY_MAPS:
            raise InvalidSet(
                f"unknown toy map {self.name!r}; known: {sorted(TOY_MAPS)}"
            )

    def __call__(self, x, tol=DEFAULT_TOL):
        return TOY_MAPS[self.name](as_point(x))


@dataclass(frozen=True)
class DemicontractivityEstimate:
    k_lower: float
    lambda_upper: float
    worst_witness: dict


def estimate_k(
    mapping,
    fixpoints: Sequence,
    samples: Sequence,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> DemicontractivityEstimate:
    """Sampled lower bound on the demicontractivity constant.

    k_lower = max over (sample x, fixed point x*) with Tx != x of
    (||Tx-x*||^2 - ||x-x*||^2) / ||Tx-x||^2.  Any valid constant for the
    mapping on the sampled region is at least k_lower.
    """
    if not len(samples):
        raise ValueError("need at least one sample point")
    fps = [as_point(f) for f in fixpoints]
    for f in fps:
        if np.linalg.norm(as_point(mapping(f, tol)) - f) > tol.geom_tol:
            raise ValueError(f"claimed fixed point {f.tolist()} is not fixed")
    best = -np.inf
    witness = None
    moved = 0
    for s in samples:
        x = as_point(s)
        txp = as_point(mapping(x, tol))
        move = float((txp - x) @ (txp - x))
        if move <= (tol.geom_tol) ** 2:
            continue
        moved += 1
        for f in fps:
            ratio = (
                float((txp - f) @ (txp - f)) - float((x - f) @ (x - f))
            ) / move
            if ratio > best:
                best = ratio
                witness = {"x": x.copy(), "fixpoint": f.copy()}
    if witness is None:
        raise ValueError("all samples are fixed points; the ratio is undefined")
    return DemicontractivityEstimate(
        k_lower=best, lambda_upper=k_to_lambda(best), worst_witness=witness
    )


# ---------------------------------------------------------------------------
# segmenting averaging matrices
# ---------------------------------------------------------------------------


def segmenting_matrix(t_values: Sequence[float], size: int) -> np.ndarray:
    """Lower-triangular row-stochastic matrix built from diagonal weights.

    Row n+1 equals (1 - t_n) * row_n padded with t_n on the diagonal, so
    the matrix satisfies the segmenting recursion by construction.
    """
    mat = np.zeros((size, size))
    mat[0, 0] = 1.0
    for n in range(size - 1):
        t = float(t_values[n % len(t_values)])
        mat[n + 1, : n + 1] = (1.0 - t) * mat[n, : n + 1]
        mat[n + 1, n + 1] = t
    return mat


def segmenting_reduction(matrix, atol: float = 1e-12) -> ControlSchedule:
    """Extract the control schedule t_k = a_{k+1,k+1} from a segmenting
    averaging matrix, validating the segmenting recursion row by row."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise InvalidSet("need a square averaging matrix of size >= 2")
    size = m.shape[0]
    if np.any(m < -atol):
        raise InvalidSet("averaging matrix has negative entries")
    if np.any(np.abs(np.triu(m, 1)) > atol):
        raise InvalidSet("averaging matrix is not lower triangular")
    rowsums = m.sum(axis=1)
    bad = np.flatnonzero(np.abs(rowsums - 1.0) > atol)
    if bad.size:
        raise InvalidSet(
            f"row {bad[0]} sums to {rowsums[bad[0]]!r}, expected 1"
        )
    worst = 0.0
    worst_row = -1
    for n in range(size - 1):
        expected = (1.0 - m[n + 1, n + 1]) * m[n, : n + 1]
        err = float(np.max(np.abs(m[n + 1, : n + 1] - expected)))
        if err > worst:
            worst, worst_row = err, n + 1
    if worst > atol:
        raise InvalidSet(
            f"segmenting condition violated in row {worst_row} "
            f"(worst entry error {worst:.3e})"
        )
    return ControlSchedule.cycle([float(m[k + 1, k + 1]) for k in range(size - 1)])


def general_mann_run(matrix, mapping, x0, steps: int, tol=DEFAULT_TOL) -> list:
    """Averaged iterates v_k of the general Mann process x_{k+1} = T(v_k),
    v_k = sum_j a_{kj} x_j.  Returns [v_0, ..., v_steps]."""
    m = np.asarray(matrix, dtype=float)
    if steps > m.shape[0] - 1:
        raise InvalidSet("matrix too small for the requested number of steps")
    xs = [as_point(x0)]
    vs = []
    for k in range(steps + 1):
        v = np.sum(m[k, : k + 1, None] * np.array(xs), axis=0)
        vs.append(v)
        xs.append(as_point(mapping(v, tol)))
    return vs


# ---------------------------------------------------------------------------
# regularity monitor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonitorReport:
    residuals: np.ndarray
    intersection_distances: np.ndarray
    verdict: str  # regular | notRegular | inconclusive


def regularity_monitor(
    trace: IterationTrace,
    family: Family,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> MonitorReport:
    """Heuristic verdict on whether the trace approaches the intersection.

    "regular" needs the intersection distances to end below ten times the
    stop residual with a non-increasing tail; "notRegular" needs per-set
    residuals below the stop residual while the intersection distance
    stays above a hundred times it over the final third.
    """
    if not trace.steps:
        raise ValueError("empty trace")
    isect = trace.intersection_distances()
    if isect is None:
        if family.intersection_oracle is not None:
            isect = np.array(
                [float(family.intersection_oracle(s.x)) for s in trace.steps]
            )
        else:
            isect = np.array(
                [dykstra_distance(family, s.x, tol) for s in trace.steps]
            )
    maxd = trace.max_set_distances()
    thr = trace.stop_residual
    tail = slice(max(0, len(isect) - max(1, len(isect) // 3)), None)
    tail_vals = isect[tail]
    nonincreasing = np.all(np.diff(tail_vals) <= 1e-12 + 1e-9 * tail_vals[:-1])
    if tail_vals[-1] <= 10.0 * thr and nonincreasing:
        verdict = "regular"
    elif np.max(maxd[tail]) <= thr and np.min(tail_vals) >= 100.0 * thr:
        verdict = "notRegular"
    else:
        verdict = "inconclusive"
    return MonitorReport(
        residuals=maxd, intersection_distances=isect, verdict=verdict
    )
