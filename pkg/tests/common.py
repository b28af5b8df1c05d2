"""Shared distributions and cached solver runs for the test suite."""

from functools import lru_cache

import aoipreempt as ap

# Reference service pmfs exercised throughout the suite.
ROW1 = (0.4, 0.2, 0.2, 0.2)
ROW2 = (0.7, 0.1, 0.2)
ROW3 = (0.05, 0.5, 0.1, 0.3, 0.05)
ROW4 = (0.3, 0.25, 0.1, 0.3, 0.05)
REFERENCE_GAINS = {  # pmf -> (optimal, double-threshold, single-threshold)
    ROW1: (2.4952, 2.4952, 2.5),
    ROW2: (1.4286, 1.4286, 1.4286),
    ROW3: (3.8049, 3.9026, 3.9071),
    ROW4: (3.2170, 3.2170, 3.333),
}
NECESSARY_TRUE = (0.5, 0.125, 0.125, 0.125, 0.125)
NECESSARY_FALSE = (0.3, 0.175, 0.175, 0.175, 0.175)
ASSUMPTION1 = (0.4, 0.3, 0.3)
ASSUMPTION2 = (0.2, 0.3, 0.5)
TWO_POINT = ((0.6, 0.4), (0.9, 0.1))
DETERMINISTIC = (1.0,)

CORPUS = (ROW1, ROW2, ROW3, ROW4, NECESSARY_TRUE, NECESSARY_FALSE,
          ASSUMPTION1, ASSUMPTION2, DETERMINISTIC) + TWO_POINT


@lru_cache(maxsize=None)
def dist(p):
    return ap.new_distribution(list(p))


@lru_cache(maxsize=None)
def solved(p, K=None):
    """Cached (ValueFunction, Policy) from relative value iteration."""
    return ap.relative_value_iteration(dist(p), K)


@lru_cache(maxsize=None)
def chain_gain(p, kind, K=None, vth1=None, vth2=None):
    """Cached exact chain evaluation of a structured policy."""
    d = dist(p)
    k = K if K is not None else ap.default_age_cap(d)
    if kind == "always_preempt":
        pol = ap.always_preempt(k, d.L)
    else:
        pol = ap.double_threshold(ap.DoubleThresholdSpec(vth1, vth2), k, d.L)
    return ap.exact_average_age(pol, d, k).average_age
