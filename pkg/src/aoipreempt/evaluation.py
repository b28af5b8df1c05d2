"""Three independent evaluations of a policy's long-run average age.

``exact_average_age``  solves the stationary distribution of the Markov
chain a policy induces on the capped grid.  ``renewal_reward_age``
evaluates double-threshold policies without any grid: successive
deliveries form an embedded Markov chain over the delivered service
duration, and the average age is the ratio of expected per-cycle age sum
to expected cycle length under that chain's stationary law.
``simulate`` rolls the system forward slot by slot with seeded draws.
The three must agree; the cross-checks are part of the test suite.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import stats

from . import backend
from .errors import HorizonTooShort, NonErgodicChain, StateOutsideGrid
from .mdp import EMPTY, State, format_state, transitions_truncated
from .policies import DoubleThresholdSpec
from .service import ServiceDistribution
from .solvers import Policy

RENEWAL_TRUNCATION = 1e-12
DIRECT_SOLVE_LIMIT = 50_000


@dataclass
class EvalReport:
    method: str  # "chain" | "renewal" | "monte_carlo"
    average_age: float
    detail: dict = field(default_factory=dict)
    stationary: dict[State, float] | None = None

    def to_json(self, include_stationary: bool = False) -> dict:
        obj = {"method": self.method, "average_age": self.average_age}
        obj.update(self.detail)
        if include_stationary and self.stationary is not None:
            obj["stationary"] = {format_state(s): p
                                 for s, p in self.stationary.items()}
        return obj


@dataclass
class CycleTrace:
    """Per-delivery event log from one simulated replication.

    ``generation[i]`` is the slot the delivered packet was sampled,
    ``delivery[i]`` the slot its age took effect at the monitor, and
    ``preemptions[i]`` the number of packets dropped since the previous
    delivery.
    """

    generation: np.ndarray
    delivery: np.ndarray
    preemptions: np.ndarray
    replication: int
    seed: int

    def validate(self, L: int) -> None:
        if self.delivery.size == 0:
            return
        if not np.all(np.diff(self.delivery) > 0):
            raise ValueError("delivery slots must be strictly increasing")
        if np.any(self.preemptions < 0):
            raise ValueError("preemption counts must be nonnegative")
        durations = self.delivery - self.generation
        if np.any(durations < 1) or np.any(durations > L):
            raise ValueError(f"service durations must lie in 1..{L}")

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "S_i", "D_i", "M_i"])
            for i in range(self.generation.size):
                writer.writerow([i + 1, int(self.generation[i]),
                                 int(self.delivery[i]), int(self.preemptions[i])])


def _induced_chain(policy: Policy, d: ServiceDistribution, K: int):
    """Reachable closed class from (1, EMPTY) and its transition edges."""
    start = State(1, EMPTY)
    order: list[State] = [start]
    index = {start: 0}
    edges: list[tuple[int, int, float]] = []
    pos = 0
    while pos < len(order):
        s = order[pos]
        for nxt, prob in transitions_truncated(s, policy.action(s), d, K):
            j = index.get(nxt)
            if j is None:
                j = len(order)
                index[nxt] = j
                order.append(nxt)
            edges.append((pos, j, prob))
        pos += 1

    # Every reachable state must lead back to the start, otherwise the
    # stationary distribution is not unique on this class.
    n = len(order)
    preds: list[list[int]] = [[] for _ in range(n)]
    for i, j, _ in edges:
        preds[j].append(i)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        j = stack.pop()
        for i in preds[j]:
            if not seen[i]:
                seen[i] = True
                stack.append(i)
    if not seen.all():
        bad = order[int(np.flatnonzero(~seen)[0])]
        raise NonErgodicChain(
            f"state {format_state(bad)} cannot return to {format_state(start)}")
    return order, edges


def _stationary_direct(n: int, edges) -> np.ndarray:
    rows = np.array([j for _, j, _ in edges])
    cols = np.array([i for i, _, _ in edges])
    vals = np.array([p for _, _, p in edges])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tolil()
    A.setdiag(A.diagonal() - 1.0)  # P^T - I
    A[n - 1, :] = 1.0              # normalization replaces the last balance row
    b = np.zeros(n)
    b[n - 1] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        pi = spla.spsolve(A.tocsc(), b)
    return pi


def _stationary_power(n: int, edges, tol: float = 1e-12,
                      max_iterations: int = 2_000_000) -> np.ndarray:
    P = sp.coo_matrix(([p for _, _, p in edges],
                       ([i for i, _, _ in edges], [j for _, j, _ in edges])),
                      shape=(n, n)).tocsr()
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iterations):
        # Damped update: keeps convergence even for periodic chains.
        nxt = 0.5 * pi + 0.5 * (pi @ P)
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    raise NonErgodicChain("power iteration did not converge")


def exact_average_age(policy: Policy, d: ServiceDistribution,
                      K: int | None = None, method: str = "auto") -> EvalReport:
    """Stationary average age of the chain a policy induces on the grid."""
    if K is None:
        K = policy.K
    if K != policy.K:
        raise StateOutsideGrid(
            f"policy built for age cap {policy.K}, requested {K}")
    order, edges = _induced_chain(policy, d, K)
    n = len(order)

    if method == "power" or (method == "auto" and n > DIRECT_SOLVE_LIMIT):
        pi = _stationary_power(n, edges)
        used = "power"
    else:
        try:
            pi = _stationary_direct(n, edges)
            used = "direct"
            if not np.all(np.isfinite(pi)):
                raise RuntimeError("singular stationary system")
        except (spla.MatrixRankWarning, RuntimeError):
            pi = _stationary_power(n, edges)
            used = "power"

    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    ages = np.array([s.v1 for s in order], dtype=np.float64)
    average = float(pi @ ages)
    cap_mass = float(pi[ages == K].sum())
    detail = {"states_reachable": n, "cap_mass": cap_mass, "solver": used,
              "K": K}
    stationary = {s: float(p) for s, p in zip(order, pi)}
    return EvalReport(method="chain", average_age=average, detail=detail,
                      stationary=stationary)


def cap_mass(policy: Policy, d: ServiceDistribution, K: int | None = None) -> float:
    """Stationary probability of a saturated monitor age (cap diagnostic)."""
    return exact_average_age(policy, d, K).detail["cap_mass"]


def _attempt_law(d: ServiceDistribution, vth2: int):
    """Delivery-duration pmf of a single transmission attempt.

    An attempt samples fresh and transmits until delivery or until the
    packet's age reaches vth2 (then it is dropped, consuming vth2 slots).
    Returns (g, G): g[k] = P(delivered with duration k), k = 1..min(vth2, L);
    G = P(dropped).  G is exactly 0 when vth2 = L.
    """
    dmax = min(vth2, d.L)
    g = np.zeros(dmax + 1)
    surv = 1.0
    for k in range(1, dmax + 1):
        g[k] = surv * float(d.q[k - 1])
        surv *= 1.0 - float(d.q[k - 1])
    return g, surv


def renewal_reward_age(spec: DoubleThresholdSpec, d: ServiceDistribution) -> EvalReport:
    """Average age of a double-threshold policy by cycle enumeration.

    A cycle runs between consecutive deliveries.  Its law depends on the
    start age y (the duration of the packet just delivered): the policy
    preempts every slot while the monitor age is at or below vth1, which
    lasts max(0, vth1 - y) slots, and then runs independent full attempts
    (drop at packet age vth2) until one delivers.  Deliveries therefore
    embed a Markov chain over y; the average age is the stationary ratio
    of expected cycle age-sum to expected cycle length.  Enumeration of
    the geometric attempt count is cut off below ``RENEWAL_TRUNCATION``
    residual mass.  Entirely independent of the grid cap.
    """
    spec.validate(d.L)
    vth1, vth2 = spec.vth1, spec.vth2
    q1 = float(d.q[0])
    g, G = _attempt_law(d, vth2)
    dmax = g.size - 1

    e_len = np.zeros(dmax + 1)
    e_sum = np.zeros(dmax + 1)
    T = np.zeros((dmax + 1, dmax + 1))
    residual = 0.0

    for y in range(1, dmax + 1):
        n1 = max(0, vth1 - y)
        outcomes: list[tuple[float, int, int]] = []  # (prob, lead slots, duration)
        pre = 1.0
        truncated = False
        for j in range(n1):
            outcomes.append((pre * q1, j, 1))
            pre *= 1.0 - q1
            if pre < RENEWAL_TRUNCATION:
                residual = max(residual, pre)
                truncated = True
                break
        if not truncated:
            m = 0
            while True:
                reach = pre * (G ** m)  # mass that survives to full attempt m+1
                if reach <= 0.0:
                    break
                if reach < RENEWAL_TRUNCATION:
                    residual = max(residual, reach)
                    break
                lead = n1 + m * vth2
                for k in range(1, dmax + 1):
                    if g[k] > 0.0:
                        outcomes.append((reach * g[k], lead, k))
                if G == 0.0:
                    break
                m += 1

        total = 0.0
        for prob, lead, k in outcomes:
            length = lead + k
            T[y, k] += prob
            e_len[y] += prob * length
            e_sum[y] += prob * (length * y + length * (length - 1) / 2.0)
            total += prob
        e_len[y] /= total
        e_sum[y] /= total
        T[y] /= total

    # Stationary law of the delivered-duration chain (least squares keeps
    # this robust when some durations are unreachable).
    n = dmax
    A = np.vstack([T[1:, 1:].T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    psi, *_ = np.linalg.lstsq(A, b, rcond=None)
    psi = np.clip(psi, 0.0, None)
    psi /= psi.sum()

    cycle_len = float(psi @ e_len[1:])
    cycle_sum = float(psi @ e_sum[1:])
    detail = {
        "expected_cycle_length": cycle_len,
        "expected_cycle_age_sum": cycle_sum,
        "attempt_drop_prob": float(G),
        "truncation_residual": residual,
        "start_age_distribution": {y + 1: float(p) for y, p in enumerate(psi)},
        "vth1": vth1,
        "vth2": vth2,
    }
    return EvalReport(method="renewal", average_age=cycle_sum / cycle_len,
                      detail=detail)


def simulate(policy: Policy, d: ServiceDistribution, horizon: int,
             replications: int = 20, seed: int = 0
             ) -> tuple[EvalReport, CycleTrace]:
    """Seeded slot-by-slot rollout; mean age with a 95% replication CI.

    Each replication draws its own stream from (seed, replication index),
    so results do not depend on execution order.  The returned trace logs
    the first replication's delivery events.
    """
    if horizon < 1000:
        raise HorizonTooShort(f"horizon {horizon} below 1000 slots")
    if replications < 1:
        raise ValueError("need at least one replication")
    K, L = policy.K, policy.L
    q = d.padded_hazards()
    actions = np.ascontiguousarray(policy.grid)
    sim = backend.kernels.simulate_slots

    means = np.zeros(replications)
    trace: CycleTrace | None = None
    for rep in range(replications):
        rng = np.random.default_rng([seed, rep])
        u = rng.random(horizon)
        ages = np.zeros(horizon, dtype=np.int64)
        s_out = np.zeros(horizon, dtype=np.int64)
        d_out = np.zeros(horizon, dtype=np.int64)
        m_out = np.zeros(horizon, dtype=np.int64)
        ndel, _, _ = sim(actions, q, K, L, u, 1, 0, ages, s_out, d_out, m_out)
        means[rep] = ages.sum() / horizon
        if rep == 0:
            trace = CycleTrace(generation=s_out[:ndel].copy(),
                               delivery=d_out[:ndel].copy(),
                               preemptions=m_out[:ndel].copy(),
                               replication=0, seed=seed)

    mean = float(means.mean())
    if replications >= 2:
        spread = float(means.std(ddof=1))
        half = float(stats.t.ppf(0.975, replications - 1)
                     * spread / np.sqrt(replications))
    else:
        half = 0.0
    detail = {"slots": horizon, "replications": replications,
              "ci_halfwidth": half, "seed": seed,
              "replication_means": [float(m) for m in means]}
    return EvalReport(method="monte_carlo", average_age=mean,
                      detail=detail), trace
