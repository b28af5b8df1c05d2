import pytest

import aoipreempt as ap
from aoipreempt import EMPTY, Action, DoubleThresholdSpec, State
from aoipreempt.errors import InvalidThresholds
from common import ROW1, ROW2, ROW3, ROW4, REFERENCE_GAINS, dist


def test_always_preempt_samples_everywhere():
    pol = ap.always_preempt(10, 4)
    assert pol.action(State(3, 1)) == Action.SAMPLE
    assert pol.action(State(1, EMPTY)) == Action.SAMPLE
    pol.validate()


def test_double_threshold_rule_table():
    pol = ap.double_threshold(DoubleThresholdSpec(2, 3), 20, 4)
    assert pol.action(State(2, 1)) == Action.SAMPLE   # phase one
    assert pol.action(State(5, 3)) == Action.SAMPLE   # drop at the age cap
    assert pol.action(State(5, 2)) == Action.CONTINUE
    assert pol.action(State(7, EMPTY)) == Action.SAMPLE
    pol.validate()


def test_thresholds_validated():
    with pytest.raises(InvalidThresholds):
        ap.double_threshold(DoubleThresholdSpec(0, 1), 10, 3)
    with pytest.raises(InvalidThresholds):
        ap.double_threshold(DoubleThresholdSpec(1, 0), 10, 3)
    with pytest.raises(InvalidThresholds):
        ap.double_threshold(DoubleThresholdSpec(1, 4), 10, 3)  # vth2 > L


def test_drop_age_one_is_always_preempt():
    for L in (2, 3, 5):
        dt = ap.double_threshold(DoubleThresholdSpec(3, 1), 15, L)
        assert dt.table_equal(ap.always_preempt(15, L))


def test_huge_first_threshold_is_always_preempt():
    K, L = 12, 3
    dt = ap.double_threshold(DoubleThresholdSpec(K, 2), K, L)
    assert dt.table_equal(ap.always_preempt(K, L))


def test_two_point_minimal_thresholds_equal_always_preempt():
    dt = ap.double_threshold(DoubleThresholdSpec(1, 1), 10, 2)
    assert dt.table_equal(ap.always_preempt(10, 2))


def test_never_drop_in_phase_two():
    # vth2 = L: phase-two packets ride to certain delivery
    pol = ap.double_threshold(DoubleThresholdSpec(1, 4), 20, 4)
    assert pol.action(State(10, 3)) == Action.CONTINUE
    pol.validate()


@pytest.mark.parametrize("p", [ROW1, ROW3, ROW4])
def test_family_nesting(p):
    d = dist(p)
    K = ap.default_age_cap(d)
    vf, _ = ap.relative_value_iteration(d, K)
    _, dt_gain = ap.search_double_threshold(d, K)
    _, single_gain = ap.single_threshold_baseline(d, K)
    assert single_gain >= dt_gain - 1e-12
    assert dt_gain >= vf.gain - 1e-9


@pytest.mark.parametrize("p", [ROW1, ROW2, ROW3, ROW4])
def test_search_matches_reference(p):
    d = dist(p)
    _, dt_gain = ap.search_double_threshold(d)
    _, single_gain = ap.single_threshold_baseline(d)
    assert dt_gain == pytest.approx(REFERENCE_GAINS[p][1], abs=5e-3)
    assert single_gain == pytest.approx(REFERENCE_GAINS[p][2], abs=5e-3)


def test_search_tie_break_is_lexicographic():
    # every spec is equivalent for single-slot service
    spec, gain = ap.search_double_threshold(dist((1.0,)), 50)
    assert (spec.vth1, spec.vth2) == (1, 1)
    assert gain == pytest.approx(1.0)


def test_search_surface_recorded():
    rec = []
    d = dist(ROW2)
    spec, gain = ap.search_double_threshold(d, record=rec)
    assert all(len(row) == 3 for row in rec)
    best = min(g for *_, g in rec)
    assert best == gain
    assert any((v1, v2) == (spec.vth1, spec.vth2) for v1, v2, _ in rec)


def test_search_accepts_renewal_evaluator():
    # cross-evaluator agreement on the argmin value
    d = dist(ROW4)
    K = ap.default_age_cap(d)
    chain_spec, chain_gain = ap.search_double_threshold(d, K)
    renewal_spec, renewal_gain = ap.search_double_threshold(
        d, K, evaluator=lambda pol: ap.renewal_reward_age(
            DoubleThresholdSpec(pol.vth1, pol.vth2), d).average_age)
    assert (renewal_spec.vth1, renewal_spec.vth2) == \
        (chain_spec.vth1, chain_spec.vth2)
    assert renewal_gain == pytest.approx(chain_gain, abs=1e-6)


def test_policy_json_round_trip():
    pol = ap.double_threshold(DoubleThresholdSpec(2, 3), 15, 4)
    obj = pol.to_json()
    assert obj == {"kind": "double_threshold", "K": 15, "L": 4,
                   "vth1": 2, "vth2": 3}
    table = pol.to_json(include_table=True)
    assert table["actions"]["5:2"] == int(Action.CONTINUE)
