"""Batch command-line front end.

    feaslab solve    --input family_run.json --out DIR
    feaslab scenario case2 --half-angle 30deg --delta 0.5 --out DIR
    feaslab check    identity --out DIR --seed 7

Exit codes: 0 success, 1 input error, 2 solve hit the iteration cap,
3 scenario verdict mismatch.  All randomness comes from --seed, so a
repeated run with the same inputs produces byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .conehull import enlargement_to_dict, report_to_dict
from .errors import FeaslabError, SolverFailure
from .iteration import ControlSchedule, projection_algorithm
from .lab import (
    Case3Params,
    gpr_experiment,
    lemma4_certificate,
    make_case4_instance,
    scenario_case1,
    scenario_case2,
    scenario_case3,
    scenario_case4,
)
from .sets import SCHEMA_VERSION, TolerancePolicy, family_from_dict
from .suites import SUITES, run_suite

DEFAULT_SEED = 12345

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_VERDICT_MISMATCH = 3


class InputError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        )


def _require(cfg: dict, key: str, typ, where: str):
    if key not in cfg:
        raise InputError(f'missing field "{key}" in {where}')
    val = cfg[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise InputError(
            f'field "{key}" in {where} must be {getattr(typ, "__name__", typ)}'
        )
    return val


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_angle(text: str) -> float:
    """Angles accept a deg/rad suffix; a bare number means degrees."""
    t = text.strip().lower()
    if t.endswith("deg"):
        return float(np.radians(float(t[:-3])))
    if t.endswith("rad"):
        return float(t[:-3])
    return float(np.radians(float(t)))


def _schedule_from_dict(d: dict) -> ControlSchedule:
    kind = _require(d, "kind", str, "schedule")
    unknown = sorted(set(d) - {"kind", "t", "values"})
    if unknown:
        raise InputError(f"unknown schedule field(s) {unknown}")
    if kind == "constant":
        return ControlSchedule.constant(_require(d, "t", float, "schedule"))
    if kind == "krasnoselskii":
        return ControlSchedule.krasnoselskii()
    if kind == "cycle":
        vals = _require(d, "values", list, "schedule")
        return ControlSchedule.cycle([float(v) for v in vals])
    raise InputError(f'unknown schedule kind "{kind}"')


def cmd_solve(args) -> int:
    cfg = _load_json(args.input)
    if not isinstance(cfg, dict):
        raise InputError("run config must be a JSON object")
    allowed = {
        "schemaVersion",
        "family",
        "strategy",
        "schedule",
        "x0",
        "maxIters",
        "stopResidual",
        "witnesses",
    }
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise InputError(f"unknown field(s) {unknown} in run config")
    if cfg.get("schemaVersion", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise InputError(f"unsupported schemaVersion {cfg.get('schemaVersion')!r}")
    family = family_from_dict(_require(cfg, "family", dict, "run config"))
    strategy = _require(cfg, "strategy", str, "run config")
    schedule = _schedule_from_dict(_require(cfg, "schedule", dict, "run config"))
    x0 = _require(cfg, "x0", list, "run config")
    max_iters = int(cfg.get("maxIters", args.max_iters))
    stop_residual = float(cfg.get("stopResidual", 1e-8))
    if args.stop_residual is not None:
        stop_residual = args.stop_residual
    witnesses = cfg.get("witnesses", [])

    trace = projection_algorithm(
        family,
        strategy,
        schedule,
        x0,
        max_iters=max_iters,
        stop_residual=stop_residual,
        witnesses=witnesses,
    )
    os.makedirs(args.out, exist_ok=True)
    trace.to_csv(os.path.join(args.out, "trace.csv"))
    summary = trace.to_json_dict()
    summary["seed"] = args.seed
    _write_json(os.path.join(args.out, "summary.json"), summary)
    print(
        f"solve: {'converged' if trace.converged else 'iteration cap'} after "
        f"{len(trace.steps) - 1} iterations, final residual "
        f"{summary['finalResidual']:.3e}"
    )
    return EXIT_OK if trace.converged else EXIT_NO_CONVERGENCE


_EXPECTED_VERDICT = {
    "case1": "gprHolds",
    "case2": "gprFails",
    "case3": "gprFails",
    "case4": "gprHolds",
}

_DEFAULT_THRESHOLD = {
    "case1": 0.03,
    "case2": 1e-4,
    "case3": 5e-3,
    "case4": 0.05,
}

_DEFAULT_HORIZON = {"case1": 60, "case2": 21, "case3": 10, "case4": 60}


def _build_scenario(args):
    if args.case == "case1":
        return scenario_case1(args.radius_a, args.radius_b, args.gap)
    if args.case == "case2":
        r_schedule = [args.r_base**k for k in range(args.r_count)]
        return scenario_case2(_parse_angle(args.half_angle), args.delta, r_schedule)
    if args.case == "case3":
        rs = tuple(float(v) for v in args.r_grid.split(","))
        params = Case3Params(args.p, args.d, rs)
        if args.half_angle is None:
            return scenario_case3(params)
        return scenario_case3(params, _parse_angle(args.half_angle))
    inst = make_case4_instance(args.instance)
    return scenario_case4(**inst)


def cmd_scenario(args) -> int:
    scenario = _build_scenario(args)
    horizon = args.horizon or _DEFAULT_HORIZON[args.case]
    threshold = args.threshold or _DEFAULT_THRESHOLD[args.case]
    report = gpr_experiment(scenario, horizon, threshold)
    os.makedirs(args.out, exist_ok=True)
    report.to_csv(os.path.join(args.out, "gpr_table.csv"))
    payload = {
        "schemaVersion": SCHEMA_VERSION,
        "scenario": args.case,
        "seed": args.seed,
        "threshold": threshold,
        "horizon": horizon,
        "verdict": report.verdict,
        "perSetDistanceTails": report.per_set_distance_tails,
        "intersectionDistanceTail": report.intersection_distance_tail,
    }
    certificate_ok = True
    if args.case == "case4":
        rng = np.random.default_rng(args.seed)
        try:
            cert = lemma4_certificate(
                scenario, args.eps, max(horizon, 400), rng=rng
            )
            payload["certificate"] = {
                "epsilon": cert.epsilon,
                "tailIndex": cert.tail_index,
                "enlargedDistanceBound": cert.enlarged_distance_bound,
                "baseDistanceBound": cert.base_distance_bound,
                "lemma3Report": report_to_dict(cert.lemma3_report),
                "pair": enlargement_to_dict(cert.pair),
                "probeOffset": float(np.linalg.norm(cert.pair.x - cert.pair.px)),
            }
            _write_json(os.path.join(args.out, "certificate.json"), payload["certificate"])
        except SolverFailure as exc:
            payload["certificate"] = {"error": str(exc)}
            certificate_ok = False
    _write_json(os.path.join(args.out, "report.json"), payload)
    expected = _EXPECTED_VERDICT[args.case]
    matched = report.verdict == expected and certificate_ok
    print(
        f"scenario {args.case}: verdict {report.verdict} (expected {expected})"
        + ("" if certificate_ok else "; certificate FAILED")
    )
    return EXIT_OK if matched else EXIT_VERDICT_MISMATCH


def cmd_check(args) -> int:
    try:
        reports = run_suite(args.suite, seed=args.seed)
    except KeyError:
        valid = sorted(SUITES) + ["all"]
        raise InputError(f'unknown suite "{args.suite}"; valid suites: {valid}')
    os.makedirs(args.out, exist_ok=True)
    payload = {
        "schemaVersion": SCHEMA_VERSION,
        "seed": args.seed,
        "suites": [r.to_dict() for r in reports],
        "passed": all(r.passed for r in reports),
    }
    _write_json(os.path.join(args.out, "check_report.json"), payload)
    for r in reports:
        print(f"check {r.name}: {r.cases} cases, {r.failures} failures")
    return EXIT_OK if payload["passed"] else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="feaslab",
        description="Projection methods and regularity diagnostics for "
        "convex feasibility problems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run the relaxed projection iteration")
    sp.add_argument("--input", required=True, help="run config JSON")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--max-iters", type=int, default=10_000)
    sp.add_argument("--stop-residual", type=float, default=None)
    sp.set_defaults(fn=cmd_solve)

    sc = sub.add_parser("scenario", help="run a regularity-lab scenario")
    sc.add_argument("case", choices=["case1", "case2", "case3", "case4"])
    sc.add_argument("--out", required=True)
    sc.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sc.add_argument("--horizon", type=int, default=None)
    sc.add_argument("--threshold", type=float, default=None)
    sc.add_argument("--radius-a", type=float, default=1.0)
    sc.add_argument("--radius-b", type=float, default=1.0)
    sc.add_argument("--gap", type=float, default=1.0)
    sc.add_argument("--half-angle", default=None, help='e.g. "30deg" or "0.52rad"')
    sc.add_argument("--delta", type=float, default=0.5)
    sc.add_argument("--r-base", type=float, default=2.0)
    sc.add_argument("--r-count", type=int, default=21)
    sc.add_argument("--p", type=float, default=1.0)
    sc.add_argument("--d", type=float, default=1.0)
    sc.add_argument("--r-grid", default="1,10,100,1000")
    sc.add_argument("--instance", choices=["square", "quad"], default="square")
    sc.add_argument("--eps", type=float, default=0.1)
    sc.set_defaults(fn=cmd_scenario)

    ck = sub.add_parser("check", help="run a property suite")
    ck.add_argument("suite")
    ck.add_argument("--out", required=True)
    ck.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ck.set_defaults(fn=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "scenario" and args.case == "case2" and args.half_angle is None:
        args.half_angle = "30deg"
    try:
        return args.fn(args)
    except (InputError, FeaslabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
