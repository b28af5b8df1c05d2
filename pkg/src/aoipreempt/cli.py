"""Command-line front end.

Subcommands: solve, solve-discounted, evaluate, search, check, reproduce,
simulate.  Exit codes: 0 success (or condition holds), 1 domain failure
(or condition violated), 2 usage error.  Domain errors are emitted as
JSON ``{code, message, context}`` on stderr for scripting.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis
from .errors import AoiPreemptError
from .evaluation import exact_average_age, renewal_reward_age, simulate
from .mdp import default_age_cap, parse_state
from .policies import (DoubleThresholdSpec, always_preempt,
                       double_threshold, search_double_threshold,
                       single_threshold_baseline)
from .service import ServiceDistribution, load_distribution, new_distribution
from .solvers import (Policy, SolverConfig, discounted_value_iteration,
                      relative_value_iteration, solver_report, table_policy,
                      value_csv)

METHOD_AGREEMENT_TOL = 1e-4
REPRODUCE_TOL = 5e-3

# Bundled reference cases: service pmf -> known-good average ages for the
# overall optimal policy, the best double-threshold policy, and the best
# fixed-drop-age (vth1 = 1) policy.
REFERENCE_ROWS = [
    ([0.4, 0.2, 0.2, 0.2], 2.4952, 2.4952, 2.5),
    ([0.7, 0.1, 0.2], 1.4286, 1.4286, 1.4286),
    ([0.05, 0.5, 0.1, 0.3, 0.05], 3.8049, 3.9026, 3.9071),
    ([0.3, 0.25, 0.1, 0.3, 0.05], 3.2170, 3.2170, 3.333),
]

# Reference cases for the always-preempt necessary condition: the checker
# verdict must match whether always-preempt is actually gain-optimal.
REFERENCE_NECESSARY = [
    ([0.5, 0.125, 0.125, 0.125, 0.125], True),
    ([0.3, 0.175, 0.175, 0.175, 0.175], False),
]

CHECK_NAMES = ("sufficient", "necessary", "nopreempt", "assumption1",
               "assumption2", "zero-wait", "threshold", "concavity", "classify")


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _emit_error(code: str, message: str, context: dict | None = None) -> None:
    sys.stderr.write(_dump_json({"code": code, "message": message,
                                 "context": context or {}}) + "\n")


def _write_out(path: str | None, obj) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_dump_json(obj) + "\n")


def _load_dist(args) -> ServiceDistribution:
    if args.dist_file:
        return load_distribution(args.dist_file)
    parts = [float(x) for x in args.p.split(",") if x.strip()]
    return new_distribution(parts)


def _resolve_k(args, d: ServiceDistribution) -> int:
    return args.K if args.K is not None else default_age_cap(d)


def _add_dist_args(sub, need_k: bool = True) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", help="service pmf as comma-separated probabilities")
    group.add_argument("--dist-file", help="JSON file with a 'p' array")
    if need_k:
        sub.add_argument("--K", type=int, default=None,
                         help="monitor age cap (default: automatic)")
    sub.add_argument("--tol", type=float, default=1e-10,
                     help="solver convergence tolerance")
    sub.add_argument("--out", default=None, help="write a JSON report here")
    sub.add_argument("--format", choices=("pretty", "json", "csv"),
                     default="pretty", help="stdout format")


def _add_policy_args(sub) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--always-preempt", action="store_true",
                       help="evaluate the always-preempt policy")
    group.add_argument("--double-threshold", nargs=2, type=int,
                       metavar=("VTH1", "VTH2"),
                       help="evaluate a double-threshold policy")
    group.add_argument("--policy-file", help="JSON policy (structured or table)")


def _policy_from_args(args, d: ServiceDistribution, K: int) -> Policy:
    if args.always_preempt:
        return always_preempt(K, d.L)
    if args.double_threshold:
        spec = DoubleThresholdSpec(*args.double_threshold)
        return double_threshold(spec, K, d.L)
    with open(args.policy_file, encoding="utf-8") as fh:
        obj = json.load(fh)
    kind = obj.get("kind")
    if kind == "always_preempt":
        return always_preempt(K, d.L)
    if kind == "double_threshold":
        return double_threshold(DoubleThresholdSpec(obj["vth1"], obj["vth2"]),
                                K, d.L)
    actions = {parse_state(k): int(v) for k, v in obj["actions"].items()}
    return table_policy(actions, obj.get("K", K), obj.get("L", d.L))


def _renewal_spec(policy: Policy) -> DoubleThresholdSpec | None:
    if policy.kind == "always_preempt":
        return DoubleThresholdSpec(1, 1)
    if policy.kind == "double_threshold":
        return DoubleThresholdSpec(policy.vth1, policy.vth2)
    return None


def cmd_solve(args) -> int:
    d = _load_dist(args)
    K = _resolve_k(args, d)
    cfg = SolverConfig(tol=args.tol)
    vf, pol = relative_value_iteration(d, K, cfg)
    report = solver_report(d, vf, pol, cfg)
    from .evaluation import cap_mass
    report["cap_mass"] = cap_mass(pol, d, K)
    _write_out(args.out, report)
    if args.value_csv:
        value_csv(vf, args.value_csv)
    if args.format == "json":
        slim = {k: report[k] for k in ("gain", "iterations", "span_residual",
                                       "K", "tol", "cap_mass")}
        print(_dump_json(slim))
    else:
        print(f"{vf.gain:.10g}")
    return 0


def cmd_solve_discounted(args) -> int:
    d = _load_dist(args)
    K = _resolve_k(args, d)
    cfg = SolverConfig(tol=args.tol, alpha=args.alpha)
    vf = discounted_value_iteration(d, K, cfg)
    report = {"alpha": args.alpha, "K": K, "iterations": vf.iterations,
              "sup_step": vf.span_residual, "value": vf.as_dict()}
    _write_out(args.out, report)
    ref = vf[parse_state("1:E")]
    if args.format == "json":
        print(_dump_json({"alpha": args.alpha, "K": K,
                          "value_at_reference": ref}))
    else:
        print(f"{ref:.10g}")
    return 0


def cmd_evaluate(args) -> int:
    d = _load_dist(args)
    K = _resolve_k(args, d)
    policy = _policy_from_args(args, d, K)
    chain = exact_average_age(policy, d, K)
    results = {"chain": chain.to_json()}
    lines = [f"chain         {chain.average_age:.10g}"]

    spec = _renewal_spec(policy)
    delta = None
    if spec is not None:
        renewal = renewal_reward_age(spec, d)
        results["renewal"] = renewal.to_json()
        delta = abs(chain.average_age - renewal.average_age)
        lines.append(f"renewal       {renewal.average_age:.10g}")
        lines.append(f"delta         {delta:.3e}")

    if args.simulate:
        mc, trace = simulate(policy, d, args.horizon, args.replications,
                             args.seed)
        results["monte_carlo"] = mc.to_json()
        half = mc.detail["ci_halfwidth"]
        lines.append(f"monte-carlo   {mc.average_age:.10g} +- {half:.4g}")
        if args.trace_out:
            trace.to_csv(args.trace_out)

    _write_out(args.out, results)
    if args.format == "json":
        print(_dump_json(results))
    else:
        for line in lines:
            print(line)
    if delta is not None and delta > METHOD_AGREEMENT_TOL:
        _emit_error("method_disagreement",
                    f"chain and renewal differ by {delta:.3e}",
                    {"tolerance": METHOD_AGREEMENT_TOL})
        return 1
    return 0


def cmd_search(args) -> int:
    d = _load_dist(args)
    K = _resolve_k(args, d)
    surface: list = []
    spec, gain = search_double_threshold(d, K, record=surface)
    vth2, single_gain = single_threshold_baseline(d, K)
    report = {"best": {"vth1": spec.vth1, "vth2": spec.vth2, "gain": gain},
              "single_threshold": {"vth1": 1, "vth2": vth2,
                                   "gain": single_gain},
              "K": K}
    _write_out(args.out, report)
    if args.surface_out:
        with open(args.surface_out, "w", encoding="utf-8") as fh:
            fh.write("vth1,vth2,gain\n")
            for v1, v2, g in surface:
                fh.write(f"{v1},{v2},{g!r}\n")
    if args.format == "json":
        print(_dump_json(report))
    else:
        print(f"best vth1={spec.vth1} vth2={spec.vth2} gain={gain:.10g}")
        print(f"single-threshold vth2={vth2} gain={single_gain:.10g}")
    return 0


def cmd_check(args) -> int:
    d = _load_dist(args)
    K = _resolve_k(args, d)
    name = args.condition

    if name == "classify":
        verdict = analysis.classify_distribution(d, K)
        _write_out(args.out, verdict)
        print(_dump_json(verdict))
        return 0 if verdict["consistent"] else 1

    if name in ("sufficient", "necessary", "nopreempt"):
        fn = {"sufficient": analysis.sufficient_condition_always_preempt,
              "necessary": analysis.necessary_condition_always_preempt,
              "nopreempt": analysis.nopreempt_condition}[name]
        report = fn(d)
    elif name in ("zero-wait", "threshold"):
        _, pol = relative_value_iteration(d, K, SolverConfig(tol=args.tol))
        report = (analysis.verify_zero_wait(pol) if name == "zero-wait"
                  else analysis.verify_threshold_in_v1(pol))
    elif name == "concavity":
        vf = discounted_value_iteration(
            d, K, SolverConfig(tol=args.tol, alpha=args.alpha))
        report = analysis.verify_concavity(vf)
    else:  # assumption1 / assumption2
        _, _, trace = analysis.run_traced_rvi(d, K, SolverConfig(tol=args.tol))
        report = (analysis.verify_assumption1(d, trace) if name == "assumption1"
                  else analysis.verify_assumption2(d, trace))

    obj = report.to_json()
    _write_out(args.out, obj)
    print(_dump_json(obj))
    return 0 if report.holds else 1


def _reproduce_rows():
    """Compute all reference cells; yields (label, computed, expected, ok)."""
    for p, ref_opt, ref_dt, ref_single in REFERENCE_ROWS:
        d = new_distribution(p)
        K = default_age_cap(d)
        vf, _ = relative_value_iteration(d, K)
        _, dt_gain = search_double_threshold(d, K)
        _, single_gain = single_threshold_baseline(d, K)
        for tag, got, ref in (("optimal", vf.gain, ref_opt),
                              ("double-threshold", dt_gain, ref_dt),
                              ("single-threshold", single_gain, ref_single)):
            ok = abs(got - ref) <= REPRODUCE_TOL
            yield p, tag, got, ref, ok
    for p, expect_holds in REFERENCE_NECESSARY:
        d = new_distribution(p)
        K = default_age_cap(d)
        vf, _ = relative_value_iteration(d, K)
        ap_gain = exact_average_age(always_preempt(K, d.L), d, K).average_age
        ap_optimal = abs(ap_gain - vf.gain) <= analysis.GAIN_MATCH_TOL
        cond = analysis.necessary_condition_always_preempt(d).holds
        yield p, "necessary-condition", float(cond), float(expect_holds), \
            cond == expect_holds and ap_optimal == expect_holds


def cmd_reproduce(args) -> int:
    cells = list(_reproduce_rows())
    all_ok = all(ok for *_, ok in cells)
    if args.format == "json":
        obj = [{"p": p, "quantity": tag, "computed": got, "reference": ref,
                "ok": ok} for p, tag, got, ref, ok in cells]
        _write_out(args.out, obj)
        print(_dump_json(obj))
    elif args.format == "csv":
        print("p,quantity,computed,reference,ok")
        for p, tag, got, ref, ok in cells:
            print(f"\"{p}\",{tag},{got!r},{ref!r},{int(ok)}")
    else:
        width = max(len(str(p)) for p, *_ in cells)
        for p, tag, got, ref, ok in cells:
            mark = "ok" if ok else "MISMATCH"
            print(f"{str(p):<{width}}  {tag:<19} {got:>12.6f}  "
                  f"ref {ref:<8} delta {abs(got - ref):.2e}  {mark}")
    if not all_ok:
        bad = [(p, tag) for p, tag, *_ , ok in cells if not ok]
        _emit_error("reproduce_mismatch", "reference cells out of tolerance",
                    {"cells": [f"{p} {tag}" for p, tag in bad]})
        return 1
    return 0


def cmd_simulate(args) -> int:
    d = _load_dist(args)
    K = _resolve_k(args, d)
    policy = _policy_from_args(args, d, K)
    report, trace = simulate(policy, d, args.horizon, args.replications,
                             args.seed)
    if args.trace_out:
        trace.to_csv(args.trace_out)
    _write_out(args.out, report.to_json())
    if args.format == "json":
        print(_dump_json(report.to_json()))
    else:
        half = report.detail["ci_halfwidth"]
        print(f"{report.average_age:.10g} +- {half:.4g} "
              f"({args.replications} x {args.horizon} slots, seed {args.seed})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoipreempt",
        description="Sampling/preemption policy solver for age-of-information "
                    "minimization over a preemptive server")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("solve", help="relative value iteration")
    _add_dist_args(sub)
    sub.add_argument("--value-csv", default=None,
                     help="dump per-state values as CSV")
    sub.set_defaults(fn=cmd_solve)

    sub = subs.add_parser("solve-discounted", help="discounted value iteration")
    _add_dist_args(sub)
    sub.add_argument("--alpha", type=float, default=0.95, help="discount factor")
    sub.set_defaults(fn=cmd_solve_discounted)

    sub = subs.add_parser("evaluate", help="evaluate a policy (chain + renewal)")
    _add_dist_args(sub)
    _add_policy_args(sub)
    sub.add_argument("--simulate", action="store_true",
                     help="add a Monte Carlo estimate")
    sub.add_argument("--horizon", type=int, default=1_000_000)
    sub.add_argument("--replications", type=int, default=20)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--trace-out", default=None,
                     help="write the delivery trace CSV here")
    sub.set_defaults(fn=cmd_evaluate)

    sub = subs.add_parser("search", help="double-threshold search")
    _add_dist_args(sub)
    sub.add_argument("--surface-out", default=None,
                     help="write the explored (vth1, vth2, gain) surface CSV")
    sub.set_defaults(fn=cmd_search)

    sub = subs.add_parser("check", help="run a structural condition checker")
    sub.add_argument("condition", choices=CHECK_NAMES)
    _add_dist_args(sub)
    sub.add_argument("--alpha", type=float, default=0.95,
                     help="discount factor for the concavity check")
    sub.set_defaults(fn=cmd_check)

    sub = subs.add_parser("reproduce",
                          help="recompute the bundled reference results")
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", choices=("pretty", "json", "csv"),
                     default="pretty")
    sub.set_defaults(fn=cmd_reproduce)

    sub = subs.add_parser("simulate", help="Monte Carlo evaluation only")
    _add_dist_args(sub)
    _add_policy_args(sub)
    sub.add_argument("--horizon", type=int, default=1_000_000)
    sub.add_argument("--replications", type=int, default=20)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--trace-out", default=None)
    sub.set_defaults(fn=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except AoiPreemptError as exc:
        _emit_error(exc.code, str(exc))
        return 1
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        _emit_error("invalid_input", f"{type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
