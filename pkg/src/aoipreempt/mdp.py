"""State grid, actions, one-step costs and transition kernels.

A state pairs the monitor age ``v1`` (1..K) with the age ``v2`` of the
packet currently in service (1..L-1, or ``EMPTY`` when the server is
idle).  ``v2 = L`` is excluded from the grid: the hazard at age L-1 is 1,
so a packet is always delivered before reaching age L.  States with
``v1 < v2`` cannot occur (the monitor can never be fresher than the
packet feeding it) and are excluded at construction.

The age cap K saturates the monitor age: any transition that would push
``v1`` past K lands in the corresponding state with ``v1 = K`` instead,
carrying the full escaped probability mass.
"""

from __future__ import annotations

import csv
import math
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleAction, KSmallerThanL, StateOutsideGrid
from .service import ServiceDistribution

# Sentinel for an idle server.
EMPTY = None


class State(NamedTuple):
    v1: int
    v2: int | None = EMPTY

    @property
    def empty(self) -> bool:
        return self.v2 is EMPTY


class Action(IntEnum):
    IDLE = 0      # keep the server empty for one slot
    SAMPLE = 1    # sample fresh and transmit, preempting any packet in service
    CONTINUE = 2  # keep transmitting the in-service packet


Transition = tuple[State, float]


def format_state(s: State) -> str:
    return f"{s.v1}:E" if s.empty else f"{s.v1}:{s.v2}"


def parse_state(text: str) -> State:
    v1_str, _, v2_str = text.partition(":")
    v1 = int(v1_str)
    return State(v1, EMPTY) if v2_str == "E" else State(v1, int(v2_str))


def state_sort_key(s: State) -> tuple[int, int, int]:
    # v1-major; busy slots ascending; EMPTY last within each v1 block.
    return (s.v1, 1 if s.empty else 0, 0 if s.empty else s.v2)


def check_state(s: State, K: int, L: int) -> None:
    if not 1 <= s.v1 <= K:
        raise StateOutsideGrid(f"monitor age {s.v1} outside 1..{K}")
    if not s.empty:
        if not 1 <= s.v2 <= L - 1:
            raise StateOutsideGrid(f"packet age {s.v2} outside 1..{L - 1}")
        if s.v1 < s.v2:
            raise StateOutsideGrid(f"monitor age {s.v1} below packet age {s.v2}")


def enumerate_states(K: int, L: int) -> list[State]:
    """All grid states in canonical order (deterministic serialization order)."""
    if L < 1:
        raise KSmallerThanL("support bound must be at least 1")
    if K < L:
        raise KSmallerThanL(f"age cap {K} must be at least the support bound {L}")
    states: list[State] = []
    for v1 in range(1, K + 1):
        for v2 in range(1, min(L - 1, v1) + 1):
            states.append(State(v1, v2))
        states.append(State(v1, EMPTY))
    return states


def feasible_actions(s: State) -> tuple[Action, ...]:
    if s.empty:
        return (Action.IDLE, Action.SAMPLE)
    return (Action.SAMPLE, Action.CONTINUE)


def cost(s: State, a: Action) -> float:
    """One-slot cost: the monitor age, whatever the action."""
    if a not in feasible_actions(s):
        raise InfeasibleAction(f"action {Action(a).name} infeasible in {format_state(s)}")
    return float(s.v1)


def transitions(s: State, a: Action, d: ServiceDistribution) -> list[Transition]:
    """Untruncated successor distribution; v1+1 may exceed any cap.

    SAMPLE delivers within the same slot with probability q1 (monitor age
    resets to 1); otherwise the fresh packet sits in the server at age 1.
    CONTINUE delivers with the hazard of the packet's next age; a delivery
    at packet age v2 leaves the monitor at age v2+1.
    """
    if a not in feasible_actions(s):
        raise InfeasibleAction(f"action {Action(a).name} infeasible in {format_state(s)}")
    v1 = s.v1
    if a == Action.IDLE:
        return [(State(v1 + 1, EMPTY), 1.0)]
    if a == Action.SAMPLE:
        q1 = d.hazard(1)
        out: list[Transition] = [(State(1, EMPTY), q1)]
        if q1 < 1.0:
            out.append((State(v1 + 1, 1), 1.0 - q1))
        return out
    # CONTINUE
    qk = d.hazard(s.v2 + 1)
    out = []
    if qk > 0.0:
        out.append((State(s.v2 + 1, EMPTY), qk))
    if qk < 1.0:
        out.append((State(v1 + 1, s.v2 + 1), 1.0 - qk))
    return out


def transitions_truncated(s: State, a: Action, d: ServiceDistribution,
                          K: int) -> list[Transition]:
    """Successor distribution on the capped grid.

    Identical to :func:`transitions` except that successors with
    ``v1 > K`` saturate to ``v1 = K`` (same server component), keeping
    their probability mass.
    """
    check_state(s, K, d.L)
    out = []
    for nxt, prob in transitions(s, a, d):
        if nxt.v1 > K:
            nxt = State(K, nxt.v2)
        out.append((nxt, prob))
    return out


def default_age_cap(d: ServiceDistribution) -> int:
    """Age cap heuristic: large enough that the cap holds negligible mass.

    Uses ``max(50, 20 L)`` plus a hazard-tail term: the per-slot survival
    probability is at most ``1 - min_k q_k``, so the cap is pushed out far
    enough that the worst-case geometric age tail is below 1e-10.
    """
    base = max(50, 20 * d.L)
    interior = d.q[d.q < 1.0]
    if interior.size == 0:
        return base
    qmin = float(interior.min())
    if qmin <= 0.0:
        # Interior-zero hazards stall at most L-1 consecutive slots; the
        # geometric bound then applies to the smallest positive hazard.
        positive = d.q[d.q > 0.0]
        qmin = float(positive.min())
        tail = int(math.ceil(d.L * math.log(1e-10) / math.log(1.0 - qmin))) \
            if qmin < 1.0 else base
    else:
        tail = int(math.ceil(math.log(1e-10) / math.log(1.0 - qmin)))
    return max(base, tail)


def valid_mask(K: int, L: int) -> np.ndarray:
    """Boolean (K+1, L+1) grid marking real states.

    Column 0 holds the EMPTY states; columns 1..L-1 the busy states;
    column L is padding so kernels can index ``v2 + 1`` unconditionally.
    """
    mask = np.zeros((K + 1, L + 1), dtype=bool)
    mask[1:, 0] = True
    for v2 in range(1, L):
        mask[v2:, v2] = True
    return mask


def state_to_index(s: State) -> tuple[int, int]:
    """Grid coordinates (row v1, column v2 with 0 for EMPTY)."""
    return s.v1, 0 if s.empty else s.v2


def index_to_state(v1: int, col: int) -> State:
    return State(v1, EMPTY) if col == 0 else State(v1, col)


def export_kernel_csv(d: ServiceDistribution, K: int, path: str) -> None:
    """Dump the truncated kernel as (state, action, next_state, prob) rows."""
    states = enumerate_states(K, d.L)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "action", "next_state", "prob"])
        for s in states:
            for a in feasible_actions(s):
                for nxt, prob in transitions_truncated(s, a, d, K):
                    writer.writerow([format_state(s), int(a), format_state(nxt),
                                     repr(prob)])
