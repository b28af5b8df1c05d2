"""Average-cost and discounted dynamic-programming solvers.

``relative_value_iteration`` solves the capped average-age problem: each
sweep applies the Bellman operator to the previous relative values, then
re-centers at the reference state (1, EMPTY) so the iterates stay
bounded.  Convergence is declared on the span seminorm (max minus min) of
the successive-iterate difference, which is invariant to the re-centering
constant; the average age (gain) is reported as the midpoint of the final
difference span.

``discounted_value_iteration`` runs standard contraction iteration from
zero; its fixed point is used for structural checks (concavity of the
value in the monitor age).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import backend
from .errors import KSmallerThanL, NoConvergence, StateOutsideGrid
from .mdp import (EMPTY, Action, State, check_state, default_age_cap,
                  enumerate_states, feasible_actions, format_state, valid_mask)
from .service import ServiceDistribution

REFERENCE_STATE = State(1, EMPTY)


@dataclass
class SolverConfig:
    """Knobs for both solvers.

    ``alpha`` is only read by the discounted solver.  ``trace_hooks`` are
    callables invoked once per relative-value sweep with an
    :class:`IterationSnapshot`; they must not mutate solver state.
    ``initial_values`` seeds the relative iteration (re-centered before
    use); the discounted iteration always starts from zero.
    """

    tol: float = 1e-10
    max_iterations: int = 1_000_000
    alpha: float | None = None
    trace_hooks: Sequence[Callable] = ()
    initial_values: np.ndarray | None = None


@dataclass(frozen=True)
class IterationSnapshot:
    """Read-only per-sweep observation passed to trace hooks.

    ``q_sample`` and ``q_idle`` are indexed by v1 only (the sample
    lookahead does not depend on the packet age); ``q_continue`` and
    ``values`` use the (K+1, L+1) grid layout.
    """

    n: int
    values: np.ndarray
    q_idle: np.ndarray
    q_sample: np.ndarray
    q_continue: np.ndarray
    diff: np.ndarray


class RviTrace:
    """Trace hook that keeps every iteration snapshot (used by analysis)."""

    def __init__(self):
        self.snapshots: list[IterationSnapshot] = []

    def __call__(self, snap: IterationSnapshot) -> None:
        self.snapshots.append(snap)

    def __iter__(self):
        return iter(self.snapshots)

    def __len__(self):
        return len(self.snapshots)


@dataclass
class ValueFunction:
    """Per-state values on the capped grid plus solve metadata.

    ``kind`` is "relative" (values are re-centered, gain is the average
    age) or "discounted" (values are total discounted cost, gain is None).
    """

    kind: str
    grid: np.ndarray
    K: int
    L: int
    iterations: int
    span_residual: float
    gain: float | None = None
    alpha: float | None = None
    reference_state: State = REFERENCE_STATE

    def __getitem__(self, s: State) -> float:
        check_state(s, self.K, self.L)
        return float(self.grid[s.v1, 0 if s.empty else s.v2])

    def items(self):
        for s in enumerate_states(self.K, self.L):
            yield s, self[s]

    def as_dict(self) -> dict[str, float]:
        return {format_state(s): v for s, v in self.items()}


@dataclass
class Policy:
    """Stationary state-feedback table.

    ``grid`` holds action tags at valid states and -1 elsewhere.  ``kind``
    records how the table was built ("table", "always_preempt",
    "double_threshold"); structured kinds carry their thresholds.
    """

    kind: str
    grid: np.ndarray
    K: int
    L: int
    vth1: int | None = None
    vth2: int | None = None

    def action(self, s: State) -> Action:
        check_state(s, self.K, self.L)
        return Action(int(self.grid[s.v1, 0 if s.empty else s.v2]))

    __getitem__ = action

    def items(self):
        for s in enumerate_states(self.K, self.L):
            yield s, self[s]

    def validate(self) -> None:
        """Check feasibility of every table entry."""
        for s, a in self.items():
            if a not in feasible_actions(s):
                raise StateOutsideGrid(
                    f"action {a.name} infeasible at {format_state(s)}")

    def table_equal(self, other: "Policy") -> bool:
        return (self.K == other.K and self.L == other.L
                and np.array_equal(self.grid, other.grid))

    def to_json(self, include_table: bool = False) -> dict:
        obj: dict = {"kind": self.kind, "K": self.K, "L": self.L}
        if self.vth1 is not None:
            obj["vth1"] = self.vth1
        if self.vth2 is not None:
            obj["vth2"] = self.vth2
        if include_table or self.kind == "table":
            obj["actions"] = {format_state(s): int(a) for s, a in self.items()}
        return obj


def _empty_policy_grid(K: int, L: int) -> np.ndarray:
    grid = np.full((K + 1, L + 1), -1, dtype=np.int8)
    return grid


def table_policy(actions: dict[State, Action | int], K: int, L: int) -> Policy:
    """Build (and validate) a plain table policy from a state-action map."""
    grid = _empty_policy_grid(K, L)
    for s in enumerate_states(K, L):
        if s not in actions:
            raise StateOutsideGrid(f"missing action for {format_state(s)}")
        grid[s.v1, 0 if s.empty else s.v2] = int(actions[s])
    pol = Policy(kind="table", grid=grid, K=K, L=L)
    pol.validate()
    return pol


def _greedy_grid(Qi: np.ndarray, Qs: np.ndarray, Qc: np.ndarray,
                 K: int, L: int) -> np.ndarray:
    """Greedy actions from per-action lookaheads.

    Ties prefer the smaller action tag: IDLE over SAMPLE at empty states,
    SAMPLE over CONTINUE at busy ones.
    """
    grid = _empty_policy_grid(K, L)
    empty = np.where(Qi[1:] <= Qs[1:], int(Action.IDLE), int(Action.SAMPLE))
    grid[1:, 0] = empty.astype(np.int8)
    for v2 in range(1, L):
        rows = slice(v2, K + 1)
        busy = np.where(Qs[rows] <= Qc[rows, v2], int(Action.SAMPLE),
                        int(Action.CONTINUE))
        grid[rows, v2] = busy.astype(np.int8)
    return grid


def _prepare(d: ServiceDistribution, K: int | None):
    if K is None:
        K = default_age_cap(d)
    if K < d.L:
        raise KSmallerThanL(f"age cap {K} below support bound {d.L}")
    return K, d.padded_hazards(), valid_mask(K, d.L)


def relative_value_iteration(d: ServiceDistribution, K: int | None = None,
                             cfg: SolverConfig | None = None
                             ) -> tuple[ValueFunction, Policy]:
    """Solve the capped average-age problem; returns (values, greedy policy).

    Stops when the span of the successive-iterate difference drops below
    ``cfg.tol``; the gain is the midpoint of the final span, so its error
    is bounded by tol/2.  Raises NoConvergence after ``max_iterations``.
    """
    cfg = cfg or SolverConfig()
    K, q, mask = _prepare(d, K)
    L = d.L
    flat = np.flatnonzero(mask.ravel())
    sweep = backend.kernels.rvi_sweep

    if cfg.initial_values is not None:
        h = np.array(cfg.initial_values, dtype=np.float64)
        if h.shape != (K + 1, L + 1):
            raise StateOutsideGrid(
                f"initial values must have shape {(K + 1, L + 1)}")
        h = h - h[1, 0]
    else:
        h = np.zeros((K + 1, L + 1))

    span = np.inf
    gain = np.nan
    for n in range(1, cfg.max_iterations + 1):
        V, Qi, Qs, Qc = sweep(h, q, K, L)
        diff = V - h
        dvals = diff.ravel()[flat]
        hi = float(dvals.max())
        lo = float(dvals.min())
        span = hi - lo
        gain = 0.5 * (hi + lo)
        if cfg.trace_hooks:
            for arr in (V, Qi, Qs, Qc, diff):
                arr.setflags(write=False)
            snap = IterationSnapshot(n=n, values=V, q_idle=Qi, q_sample=Qs,
                                     q_continue=Qc, diff=diff)
            for hook in cfg.trace_hooks:
                hook(snap)
        h = V - V[1, 0]
        if span < cfg.tol:
            _, Qi, Qs, Qc = sweep(h, q, K, L)
            vf = ValueFunction(kind="relative", grid=h, K=K, L=L,
                               iterations=n, span_residual=span, gain=gain)
            pol = Policy(kind="table", grid=_greedy_grid(Qi, Qs, Qc, K, L),
                         K=K, L=L)
            return vf, pol
    raise NoConvergence(
        f"relative value iteration: span {span:.3e} after "
        f"{cfg.max_iterations} sweeps (tol {cfg.tol:.1e})",
        iterations=cfg.max_iterations, residual=span)


def discounted_value_iteration(d: ServiceDistribution, K: int | None = None,
                               cfg: SolverConfig | None = None) -> ValueFunction:
    """Solve the discounted problem from zero initial values.

    Stops when the sup-norm step falls below ``tol (1 - alpha) / (2 alpha)``,
    which bounds the distance to the fixed point by tol/2.
    """
    cfg = cfg or SolverConfig(alpha=0.95)
    if cfg.alpha is None or not 0.0 < cfg.alpha < 1.0:
        raise ValueError(f"discount must lie in (0, 1), got {cfg.alpha!r}")
    K, q, mask = _prepare(d, K)
    L = d.L
    flat = np.flatnonzero(mask.ravel())
    sweep = backend.kernels.dvi_sweep
    alpha = cfg.alpha
    threshold = cfg.tol * (1.0 - alpha) / (2.0 * alpha)

    v = np.zeros((K + 1, L + 1))
    step = np.inf
    for n in range(1, cfg.max_iterations + 1):
        V, _, _, _ = sweep(v, q, K, L, alpha)
        step = float(np.abs((V - v).ravel()[flat]).max())
        v = V
        if step < threshold:
            return ValueFunction(kind="discounted", grid=v, K=K, L=L,
                                 iterations=n, span_residual=step, alpha=alpha)
    raise NoConvergence(
        f"discounted value iteration: step {step:.3e} after "
        f"{cfg.max_iterations} sweeps", iterations=cfg.max_iterations,
        residual=step)


def extract_policy(V: ValueFunction, d: ServiceDistribution,
                   K: int | None = None) -> Policy:
    """Greedy one-step-lookahead policy for a solved value function."""
    K = V.K if K is None else K
    if K != V.K:
        raise StateOutsideGrid("age cap does not match the value function")
    q = d.padded_hazards()
    if V.kind == "discounted":
        _, Qi, Qs, Qc = backend.kernels.dvi_sweep(V.grid, q, K, V.L, V.alpha)
    else:
        _, Qi, Qs, Qc = backend.kernels.rvi_sweep(V.grid, q, K, V.L)
    return Policy(kind="table", grid=_greedy_grid(Qi, Qs, Qc, K, V.L),
                  K=K, L=V.L)


def solver_report(d: ServiceDistribution, vf: ValueFunction, policy: Policy,
                  cfg: SolverConfig | None = None) -> dict:
    """Assembled solve result for serialization."""
    cfg = cfg or SolverConfig()
    return {
        "gain": vf.gain,
        "iterations": vf.iterations,
        "span_residual": vf.span_residual,
        "K": vf.K,
        "tol": cfg.tol,
        "distribution": d.to_json(),
        "policy": {format_state(s): int(a) for s, a in policy.items()},
        "value": vf.as_dict(),
    }


def value_csv(vf: ValueFunction, path: str) -> None:
    """Dump per-state values as (v1, v2, value) rows for plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("v1,v2,value\n")
        for s, v in vf.items():
            v2 = "E" if s.empty else s.v2
            fh.write(f"{s.v1},{v2},{v!r}\n")
