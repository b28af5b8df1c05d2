"""Discrete service-time distributions of the error-free preemptive server.

A service time Y is a positive integer number of slots with pmf
``p[i-1] = P(Y = i)`` on a finite support ``1..L``.  The derived hazard
rate ``q[k-1]`` is the probability that the in-service packet is delivered
in the current slot given it has already spent ``k-1`` slots in service:

    q_k = p_k / (p_k + p_{k+1} + ... + p_L)

``q_L`` is pinned to exactly 1.0 so downstream code can rely on certain
delivery once a packet reaches age ``L-1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyOrNegativePmf, OutOfSupport, UnnormalizedPmf, ZeroFirstSlot

# Input pmfs may carry decimal round-off (e.g. after a JSON round trip);
# they are renormalized to an exact sum of 1 internally.
PMF_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ServiceDistribution:
    """Validated service-time pmf with derived hazard rates.

    Attributes:
        p: pmf over slots 1..L (index i-1 holds P(Y = i)), exact sum 1.
        q: hazard rates for slots 1..L, with q[L-1] == 1.0 exactly.
        L: minimal support bound (trailing zero probabilities trimmed).
        mean_service: E[Y] in slots.
    """

    p: np.ndarray
    q: np.ndarray
    L: int
    mean_service: float

    def hazard(self, k: int) -> float:
        """Delivery probability in the current slot after k-1 slots of service."""
        if not 1 <= k <= self.L:
            raise OutOfSupport(f"slot-age index {k} outside support 1..{self.L}")
        return float(self.q[k - 1])

    def is_geometric(self, tol: float = 1e-9) -> bool:
        """True iff the hazard rate is constant on the interior 1..L-1.

        A truncated geometric distribution has the memoryless property on
        its interior; the forced q_L = 1 terminal slot is ignored.
        """
        interior = self.q[: self.L - 1]
        if interior.size <= 1:
            return True
        return bool(np.all(np.abs(interior - interior[0]) <= tol))

    def padded_hazards(self) -> np.ndarray:
        """Hazards as a length L+1 array with q[0] unused; used by kernels."""
        out = np.zeros(self.L + 1)
        out[1:] = self.q
        return out

    def to_json(self) -> dict:
        return {
            "p": [float(x) for x in self.p],
            "q": [float(x) for x in self.q],
            "L": self.L,
            "mean_service": self.mean_service,
        }

    def __repr__(self) -> str:
        return f"ServiceDistribution(p={self.p.tolist()})"


def new_distribution(p) -> ServiceDistribution:
    """Validate a raw pmf and build a ServiceDistribution.

    Raises:
        EmptyOrNegativePmf: empty input or any negative entry.
        ZeroFirstSlot: the one-slot probability is zero.
        UnnormalizedPmf: entries do not sum to 1 within ``PMF_SUM_TOL``.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyOrNegativePmf("pmf must be a nonempty vector")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise EmptyOrNegativePmf("pmf entries must be finite and nonnegative")
    if arr[0] <= 0:
        raise ZeroFirstSlot("one-slot service probability must be positive")
    total = float(arr.sum())
    if abs(total - 1.0) > PMF_SUM_TOL:
        raise UnnormalizedPmf(f"pmf sums to {total!r}, expected 1 within {PMF_SUM_TOL}")

    last = int(np.max(np.nonzero(arr)[0]))  # minimal support bound
    arr = arr[: last + 1] / total

    L = arr.size
    tails = np.cumsum(arr[::-1])[::-1]  # tails[k-1] = P(Y >= k)
    q = arr / tails
    q[-1] = 1.0  # exact, absorbing division residue
    q.setflags(write=False)
    arr.setflags(write=False)
    mean = float(np.dot(np.arange(1, L + 1), arr))
    return ServiceDistribution(p=arr, q=q, L=L, mean_service=mean)


def hazard(d: ServiceDistribution, k: int) -> float:
    return d.hazard(k)


def is_geometric(d: ServiceDistribution, tol: float = 1e-9) -> bool:
    return d.is_geometric(tol)


def load_distribution(path: str) -> ServiceDistribution:
    """Read a ``{"p": [...]}'' JSON file."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "p" not in obj:
        raise EmptyOrNegativePmf(f"{path}: expected a JSON object with a 'p' array")
    return new_distribution(obj["p"])
