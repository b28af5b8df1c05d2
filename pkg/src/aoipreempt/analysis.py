"""Mechanical checks of the structural properties of optimal policies.

Each checker returns a :class:`ConditionReport` with a boolean verdict, a
witness for violated universally-quantified conditions, and whatever
intermediate data makes the verdict auditable.  Conditions stated for
real-valued monitor ages or for all iterations are checked on the integer
grid over the recorded iterations; reports carry a note saying so.  Rows
near the age cap (v1 within L of K) are excluded everywhere: the cap
deliberately distorts the Bellman operator there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .mdp import EMPTY, Action, State, default_age_cap, format_state
from .policies import always_preempt
from .service import ServiceDistribution
from .solvers import (IterationSnapshot, Policy, RviTrace, SolverConfig,
                      ValueFunction, relative_value_iteration)

CONCAVITY_TOL = 1e-8
GAIN_MATCH_TOL = 1e-6


@dataclass
class ConditionReport:
    condition_name: str
    holds: bool
    witness: object | None = None
    intermediate: dict = field(default_factory=dict)
    note: str | None = None

    def to_json(self) -> dict:
        witness = self.witness
        if isinstance(witness, State):
            witness = format_state(witness)
        return {"condition_name": self.condition_name, "holds": self.holds,
                "witness": witness, "intermediate": _jsonable(self.intermediate),
                "note": self.note}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, State):
        return format_state(obj)
    return obj


def sufficient_condition_always_preempt(d: ServiceDistribution) -> ConditionReport:
    """Fresh samples dominate: q1 >= q_j for every later slot j.

    When this holds the always-preempt policy is optimal.  It can never
    hold for a bounded support with q1 < 1 since q_L = 1.
    """
    for j in range(2, d.L + 1):
        if d.q[0] < d.q[j - 1]:
            return ConditionReport("sufficient_always_preempt", False, witness=j,
                                   intermediate={"q": d.q.tolist()})
    return ConditionReport("sufficient_always_preempt", True,
                           intermediate={"q": d.q.tolist()})


def nopreempt_condition(d: ServiceDistribution) -> ConditionReport:
    """q1 >= q_j for j >= 3 (slot 2 exempt).

    Guarantees the double-threshold family contains an optimal policy;
    like the sufficient condition it fails for any bounded support with
    q1 < 1.
    """
    for j in range(3, d.L + 1):
        if d.q[0] < d.q[j - 1]:
            return ConditionReport("nopreempt", False, witness=j,
                                   intermediate={"q": d.q.tolist()})
    return ConditionReport("nopreempt", True, intermediate={"q": d.q.tolist()})


def necessary_condition_always_preempt(d: ServiceDistribution) -> ConditionReport:
    """Backward recursion test that always-preempt must pass to be optimal.

    f_i bounds the optimal expected time to the next delivery from a
    packet of age i: f_{L-1} = 1, f_1 = 1/q1, and
    f_i = min(1 + (1 - q_{i+1}) f_{i+1}, f_1) going down from i = L-2.
    Always-preempt can only be optimal if 1 + (1 - q2) f_2 >= 1/q1.
    For L = 2 it can never be optimal.
    """
    name = "necessary_always_preempt"
    L = d.L
    if L == 1:
        return ConditionReport(name, True, note="single-slot service; "
                               "always-preempt is trivially optimal")
    if L == 2:
        return ConditionReport(name, False,
                               note="two-point support: always-preempt is "
                               "never optimal")
    f = np.zeros(L)  # f[i] for ages 1..L-1 at indices 1..L-1
    f1 = 1.0 / d.q[0]
    f[1] = f1
    f[L - 1] = 1.0
    for i in range(L - 2, 1, -1):
        f[i] = min(1.0 + (1.0 - d.q[i]) * f[i + 1], f1)
    lhs = 1.0 + (1.0 - d.q[1]) * f[2]
    holds = bool(lhs >= f1)
    return ConditionReport(name, holds,
                           intermediate={"f": f[1:].tolist(), "lhs": lhs,
                                         "rhs": f1})


def verify_zero_wait(policy: Policy) -> ConditionReport:
    """The policy must sample, never idle, whenever the server is empty."""
    for v1 in range(1, policy.K + 1):
        if policy.grid[v1, 0] == int(Action.IDLE):
            return ConditionReport("zero_wait", False, witness=State(v1, EMPTY))
    return ConditionReport("zero_wait", True)


def verify_threshold_in_v1(policy: Policy, L: int | None = None) -> ConditionReport:
    """Per packet age, CONTINUE must persist once it appears as v1 grows.

    Checked on every busy column away from the cap.  The last column
    (packet age L-1) gets a separate flag: the threshold structure there
    holds unconditionally, the full-table form only under extra
    assumptions on the hazards.
    """
    L = policy.L if L is None else L
    K = policy.K
    top = K - L  # rows v1 >= K - L excluded
    witness = None
    per_row: dict[int, bool] = {}
    for v2 in range(1, L):
        seen_continue = False
        row_ok = True
        for v1 in range(v2, top):
            a = policy.grid[v1, v2]
            if a == int(Action.CONTINUE):
                seen_continue = True
            elif seen_continue:
                row_ok = False
                if witness is None:
                    witness = State(v1, v2)
                break
        per_row[v2] = row_ok
    holds = all(per_row.values()) if per_row else True
    last_row = per_row.get(L - 1, True)
    return ConditionReport("threshold_in_v1", holds, witness=witness,
                           intermediate={"per_packet_age": per_row,
                                         "last_packet_age_only": last_row},
                           note=f"cap rows v1 >= {top} excluded")


def verify_concavity(V: ValueFunction, L: int | None = None,
                     K: int | None = None,
                     tol: float = CONCAVITY_TOL) -> ConditionReport:
    """Second differences of the value in v1 must be <= tol per column."""
    L = V.L if L is None else L
    K = V.K if K is None else K
    top = K - L  # interior: v1 + 2 <= K - L
    witness = None
    worst = -np.inf
    for col in range(0, L):
        lo = 1 if col == 0 else col
        for v1 in range(lo, top - 1):
            sd = V.grid[v1 + 2, col] - 2.0 * V.grid[v1 + 1, col] + V.grid[v1, col]
            if sd > worst:
                worst = sd
            if sd > tol and witness is None:
                witness = State(v1, EMPTY if col == 0 else col)
    return ConditionReport("concavity_in_v1", witness is None, witness=witness,
                           intermediate={"max_second_difference": float(worst),
                                         "tol": tol},
                           note=f"checked v1 + 2 <= {top}")


def verify_assumption1(d: ServiceDistribution,
                       rvi_trace: Iterable[IterationSnapshot]) -> ConditionReport:
    """Nondecreasing interior hazards plus per-sweep action monotonicity.

    The action clause: at every recorded sweep, if CONTINUE is weakly
    greedy-optimal at (v1, v2) it must stay weakly optimal at (v1, v2')
    for every larger packet age v2' on the grid.
    """
    name = "assumption1"
    interior = d.q[: d.L - 1]
    hazard_ok = bool(np.all(np.diff(interior) >= 0)) if interior.size > 1 else True

    action_ok = True
    witness = None
    snaps = list(rvi_trace)
    if d.L >= 3 and snaps:
        K = snaps[0].q_continue.shape[0] - 1
        top = K - d.L
        for snap in snaps:
            qs = snap.q_sample
            qc = snap.q_continue
            for v1 in range(2, top):
                prev_cont = False
                for v2 in range(1, min(d.L - 1, v1) + 1):
                    cont = qc[v1, v2] <= qs[v1]
                    if prev_cont and not cont:
                        action_ok = False
                        if witness is None:
                            witness = (snap.n, State(v1, v2))
                        break
                    prev_cont = cont
                if not action_ok:
                    break
            if not action_ok:
                break

    holds = hazard_ok and action_ok
    return ConditionReport(
        name, holds, witness=witness,
        intermediate={"hazard_clause": hazard_ok, "action_clause": action_ok,
                      "q": d.q.tolist()},
        note=f"action clause checked on grid over {len(snaps)} sweeps")


def verify_assumption2(d: ServiceDistribution,
                       rvi_trace: Iterable[IterationSnapshot]) -> ConditionReport:
    """Coupling of first sample-vs-continue crossings across sweeps.

    Per busy row the sample lookahead is the smaller one near the
    diagonal and the continue lookahead wins for large monitor ages, so
    the crossing scanned upward is the first v1 >= v2 where CONTINUE
    becomes weakly optimal (ties included).  If sweep n crosses row v2 at
    offset x1 (v1 = v2 + x1), then at sweep n-1 row 1 must either not
    cross or cross at 1 + x2 with x2 <= x1 + v2, and row v2+1 must
    either not cross or cross at v2 + 1 + x3 with x3 <= x1.  If sweep n
    does not cross row v2, sweep n-1 must not cross rows 1 and v2+1
    either.
    """
    name = "assumption2"
    snaps = list(rvi_trace)
    if d.L < 2 or not snaps:
        return ConditionReport(name, True,
                               note="no busy states or no recorded sweeps")
    K = snaps[0].q_continue.shape[0] - 1
    top = K - d.L

    crossings: list[dict[int, int | None]] = []
    for snap in snaps:
        per_row: dict[int, int | None] = {}
        for v2 in range(1, d.L):
            qs = snap.q_sample[v2:top]
            qc = snap.q_continue[v2:top, v2]
            idx = np.flatnonzero(qc <= qs)
            per_row[v2] = int(idx[0]) + v2 if idx.size else None
        crossings.append(per_row)

    witness = None
    holds = True
    for k in range(1, len(snaps)):
        cur = crossings[k]
        prev = crossings[k - 1]
        n = snaps[k].n
        for v2 in range(1, d.L):
            c = cur[v2]
            linked = [1] + ([v2 + 1] if v2 + 1 <= d.L - 1 else [])
            if c is None:
                for row in linked:
                    if prev[row] is not None:
                        holds = False
                        witness = (n, v2, f"no crossing at sweep {n} but row "
                                   f"{row} crossed at sweep {n - 1}")
                        break
            else:
                x1 = c - v2
                c1 = prev[1]
                if c1 is not None and not c1 - 1 <= x1 + v2:
                    holds = False
                    witness = (n, v2, f"row 1 offset {c1 - 1} exceeds {x1 + v2}")
                elif v2 + 1 <= d.L - 1:
                    cn = prev[v2 + 1]
                    if cn is not None and not cn - (v2 + 1) <= x1:
                        holds = False
                        witness = (n, v2, f"row {v2 + 1} offset "
                                   f"{cn - (v2 + 1)} exceeds {x1}")
            if not holds:
                break
        if not holds:
            break

    sample_tables = {f"sweep_{snaps[k].n}": crossings[k]
                     for k in range(max(0, len(snaps) - 3), len(snaps))}
    return ConditionReport(
        name, holds, witness=witness,
        intermediate={"final_crossings": crossings[-1],
                      "recent_crossing_tables": sample_tables},
        note=f"checked on grid over {len(snaps)} sweeps, ties count as crossings")


def run_traced_rvi(d: ServiceDistribution, K: int | None = None,
                   cfg: SolverConfig | None = None):
    """Relative value iteration with a full per-sweep trace attached."""
    trace = RviTrace()
    base = cfg or SolverConfig()
    cfg = SolverConfig(tol=base.tol, max_iterations=base.max_iterations,
                       alpha=base.alpha, trace_hooks=(*base.trace_hooks, trace),
                       initial_values=base.initial_values)
    vf, pol = relative_value_iteration(d, K, cfg)
    return vf, pol, trace


def classify_distribution(d: ServiceDistribution, K: int | None = None) -> dict:
    """Solve, search, and cross-tabulate every checker into one verdict.

    ``consistent`` aggregates the soundness relations: a holding
    sufficient condition must come with an optimal always-preempt policy,
    and an optimal always-preempt policy must pass the necessary
    condition.
    """
    from .evaluation import exact_average_age
    from .policies import search_double_threshold, single_threshold_baseline

    if K is None:
        K = default_age_cap(d)
    vf, pol, trace = run_traced_rvi(d, K)
    gain_opt = vf.gain

    ap_pol = always_preempt(K, d.L)
    gain_ap = exact_average_age(ap_pol, d, K).average_age
    dt_spec, gain_dt = search_double_threshold(d, K)
    single_vth2, gain_single = single_threshold_baseline(d, K)

    ap_optimal = bool(abs(gain_ap - gain_opt) <= GAIN_MATCH_TOL)
    dt_optimal = bool(abs(gain_dt - gain_opt) <= GAIN_MATCH_TOL)

    reports = {
        "sufficient": sufficient_condition_always_preempt(d),
        "necessary": necessary_condition_always_preempt(d),
        "nopreempt": nopreempt_condition(d),
        "zero_wait": verify_zero_wait(pol),
        "threshold_in_v1": verify_threshold_in_v1(pol),
        "assumption1": verify_assumption1(d, trace),
        "assumption2": verify_assumption2(d, trace),
    }

    consistent = True
    if reports["sufficient"].holds and not ap_optimal:
        consistent = False
    if ap_optimal and not reports["necessary"].holds:
        consistent = False

    return {
        "distribution": d.to_json(),
        "K": K,
        "gains": {
            "optimal": gain_opt,
            "always_preempt": gain_ap,
            "double_threshold": gain_dt,
            "double_threshold_spec": {"vth1": dt_spec.vth1, "vth2": dt_spec.vth2},
            "single_threshold": gain_single,
            "single_threshold_vth2": single_vth2,
        },
        "always_preempt_optimal": ap_optimal,
        "double_threshold_family_optimal": dt_optimal,
        "conditions": {name: rep.to_json() for name, rep in reports.items()},
        "consistent": consistent,
    }
