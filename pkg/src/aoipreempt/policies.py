"""Structured sampling/preemption policy families and threshold search.

The double-threshold family works in two phases within each
inter-delivery interval.  While the monitor age is at or below ``vth1``
the sampler preempts every slot (each packet gets exactly one delivery
attempt).  Once the monitor age exceeds ``vth1``, each packet is
transmitted until its own age reaches ``vth2``, then dropped and
replaced.  ``vth2 = L`` means a packet is never dropped in the second
phase (delivery is certain by age L); ``vth2 = 1`` reduces the family to
the always-preempt policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import InvalidThresholds
from .mdp import Action
from .service import ServiceDistribution
from .solvers import Policy, _empty_policy_grid

Evaluator = Callable[[Policy], float]


@dataclass(frozen=True)
class DoubleThresholdSpec:
    vth1: int  # monitor-age threshold ending the every-slot-preempt phase
    vth2: int  # packet-age threshold at which a phase-two packet is dropped

    def validate(self, L: int) -> None:
        if self.vth1 < 1:
            raise InvalidThresholds(f"vth1 must be >= 1, got {self.vth1}")
        if not 1 <= self.vth2 <= L:
            raise InvalidThresholds(
                f"vth2 must lie in 1..{L}, got {self.vth2}")

    def to_json(self) -> dict:
        return {"kind": "double_threshold", "vth1": self.vth1, "vth2": self.vth2}


def always_preempt(K: int, L: int) -> Policy:
    """Sample fresh at every state."""
    grid = _empty_policy_grid(K, L)
    grid[1:, 0] = int(Action.SAMPLE)
    for v2 in range(1, L):
        grid[v2:, v2] = int(Action.SAMPLE)
    return Policy(kind="always_preempt", grid=grid, K=K, L=L)


def double_threshold(spec: DoubleThresholdSpec, K: int, L: int) -> Policy:
    """Expand a double-threshold rule to a full state-feedback table.

    Empty server: always sample (zero wait).  Busy server at (v1, v2):
    sample while v1 <= vth1 (phase one), and in phase two continue while
    v2 < vth2, dropping the packet once its age reaches vth2.
    """
    spec.validate(L)
    grid = _empty_policy_grid(K, L)
    grid[1:, 0] = int(Action.SAMPLE)
    for v2 in range(1, L):
        for v1 in range(v2, K + 1):
            if v1 <= spec.vth1 or v2 >= spec.vth2:
                grid[v1, v2] = int(Action.SAMPLE)
            else:
                grid[v1, v2] = int(Action.CONTINUE)
    return Policy(kind="double_threshold", grid=grid, K=K, L=L,
                  vth1=spec.vth1, vth2=spec.vth2)


def _default_evaluator(d: ServiceDistribution, K: int | None) -> Evaluator:
    from .evaluation import exact_average_age
    return lambda pol: exact_average_age(pol, d, K).average_age


def search_double_threshold(d: ServiceDistribution, K: int | None = None,
                            evaluator: Evaluator | None = None, *,
                            vth1_cap: int | None = None,
                            record: list | None = None
                            ) -> tuple[DoubleThresholdSpec, float]:
    """Exhaustive threshold search; returns the best spec and its gain.

    vth2 runs over 1..L.  vth1 grows from 1 until the surface has clearly
    passed its optimum: the gain at fixed vth2 >= 2 is a U-shaped
    function of vth1 (vth2 = 1 pins the always-preempt policy whatever
    vth1 is), so the scan stops once every such column has strictly
    worsened for three consecutive increments, capped at K/2.  Ties go to
    the lexicographically smallest thresholds.  ``record``, when given,
    collects (vth1, vth2, gain) rows for the surface explored.
    """
    from .evaluation import exact_average_age  # default evaluator path
    if K is None:
        from .mdp import default_age_cap
        K = default_age_cap(d)
    if evaluator is None:
        evaluator = lambda pol: exact_average_age(pol, d, K).average_age
    L = d.L
    cap = vth1_cap if vth1_cap is not None else max(1, K // 2)

    best_spec = None
    best_gain = float("inf")
    prev = {vth2: float("inf") for vth2 in range(2, L + 1)}
    rising = {vth2: 0 for vth2 in range(2, L + 1)}
    for vth1 in range(1, cap + 1):
        for vth2 in range(1, L + 1):
            spec = DoubleThresholdSpec(vth1, vth2)
            gain = evaluator(double_threshold(spec, K, L))
            if record is not None:
                record.append((vth1, vth2, gain))
            if gain < best_gain:
                best_gain = gain
                best_spec = spec
            if vth2 >= 2:
                if gain > prev[vth2] + 1e-12:
                    rising[vth2] += 1
                else:
                    rising[vth2] = 0
                prev[vth2] = gain
        if L == 1 or all(r >= 3 for r in rising.values()):
            break
    return best_spec, best_gain


def single_threshold_baseline(d: ServiceDistribution, K: int | None = None,
                              evaluator: Evaluator | None = None
                              ) -> tuple[int, float]:
    """Best fixed-drop-age policy with vth1 pinned to 1.

    With vth1 = 1 the first phase is skipped entirely (the monitor age at
    a fresh sample is always at least 1), leaving the single-threshold
    family: sample on delivery, drop each packet when its age reaches
    vth2.  Returns (best vth2, gain).
    """
    from .evaluation import exact_average_age
    if K is None:
        from .mdp import default_age_cap
        K = default_age_cap(d)
    if evaluator is None:
        evaluator = lambda pol: exact_average_age(pol, d, K).average_age
    best_vth2 = None
    best_gain = float("inf")
    for vth2 in range(1, d.L + 1):
        gain = evaluator(double_threshold(DoubleThresholdSpec(1, vth2), K, d.L))
        if gain < best_gain:
            best_gain = gain
            best_vth2 = vth2
    return best_vth2, best_gain
