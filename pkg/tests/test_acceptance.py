"""End-to-end acceptance gate.

One test per criterion; each prints a single PASS/FAIL line, so the whole
gate reads off one run:

    pytest tests/test_acceptance.py -v -s
"""

import contextlib
import time

import aoipreempt as ap
from aoipreempt import DoubleThresholdSpec
from aoipreempt import analysis as an
from common import (ASSUMPTION1, ASSUMPTION2, CORPUS, NECESSARY_FALSE,
                    NECESSARY_TRUE, REFERENCE_GAINS, ROW1, ROW2, ROW3, ROW4,
                    TWO_POINT, dist, solved)

ROW_TOL = 5e-3
GAIN_TOL = 1e-6


@contextlib.contextmanager
def criterion(number, label):
    try:
        yield
    except BaseException:
        print(f"criterion {number:2d} FAIL  {label}")
        raise
    print(f"criterion {number:2d} PASS  {label}")


def _row_gains(p, K):
    d = dist(p)
    vf, _ = ap.relative_value_iteration(d, K)
    _, dt_gain = ap.search_double_threshold(d, K)
    _, single_gain = ap.single_threshold_baseline(d, K)
    return vf.gain, dt_gain, single_gain


def test_criterion_1_first_row_and_runtime():
    with criterion(1, "row [0.4,0.2,0.2,0.2] at K=100 within 5e-3, under 10 s"):
        t0 = time.perf_counter()
        gains = _row_gains(ROW1, 100)
        elapsed = time.perf_counter() - t0
        for got, ref in zip(gains, REFERENCE_GAINS[ROW1]):
            assert abs(got - ref) <= ROW_TOL, (got, ref)
        assert elapsed < 10.0, f"took {elapsed:.1f} s"


def test_criterion_2_second_row_and_exact_inverse_hazard():
    with criterion(2, "row [0.7,0.1,0.2] within 5e-3; always-preempt = 1/0.7"):
        gains = _row_gains(ROW2, None)
        for got, ref in zip(gains, REFERENCE_GAINS[ROW2]):
            assert abs(got - ref) <= ROW_TOL
        d = dist(ROW2)
        K = ap.default_age_cap(d)
        exact = ap.exact_average_age(ap.always_preempt(K, d.L), d, K)
        assert abs(exact.average_age - 1 / 0.7) < GAIN_TOL


def test_criterion_3_third_row_and_family_gap():
    with criterion(3, "row [0.05,0.5,0.1,0.3,0.05] within 5e-3; family gap > 0.05"):
        opt, dt, single = _row_gains(ROW3, None)
        for got, ref in zip((opt, dt, single), REFERENCE_GAINS[ROW3]):
            assert abs(got - ref) <= ROW_TOL
        assert dt - opt > 0.05


def test_criterion_4_fourth_row():
    with criterion(4, "row [0.3,0.25,0.1,0.3,0.05] within 5e-3"):
        gains = _row_gains(ROW4, None)
        for got, ref in zip(gains, REFERENCE_GAINS[ROW4]):
            assert abs(got - ref) <= ROW_TOL


def test_criterion_5_necessary_condition_matches_solver():
    with criterion(5, "necessary condition matches always-preempt optimality"):
        for p, expect in ((NECESSARY_TRUE, True), (NECESSARY_FALSE, False)):
            d = dist(p)
            vf, _ = solved(p)
            K = vf.K
            ap_gain = ap.exact_average_age(ap.always_preempt(K, d.L), d,
                                           K).average_age
            optimal = abs(ap_gain - vf.gain) <= GAIN_TOL
            holds = an.necessary_condition_always_preempt(d).holds
            assert holds == expect, p
            assert optimal == expect, p


def test_criterion_6_two_point_strict_suboptimality():
    with criterion(6, "two-point supports: always-preempt strictly beaten"):
        for p in TWO_POINT:
            d = dist(p)
            vf, pol = solved(p)
            K = vf.K
            opt_exact = ap.exact_average_age(pol, d, K).average_age
            ap_exact = ap.exact_average_age(ap.always_preempt(K, d.L), d,
                                            K).average_age
            assert ap_exact - opt_exact > 0, p
            assert not pol.table_equal(ap.always_preempt(K, d.L)), p


def test_criterion_7_zero_wait_everywhere():
    with criterion(7, "optimal policies never idle at an empty server"):
        for p in CORPUS:
            _, pol = solved(p)
            rep = an.verify_zero_wait(pol)
            assert rep.holds, (p, rep.witness)


def test_criterion_8_concavity_suite():
    with criterion(8, "discounted values concave in v1 (alpha 0.9/0.95/0.99)"):
        for p in CORPUS:
            d = dist(p)
            for alpha in (0.9, 0.95, 0.99):
                vf = ap.discounted_value_iteration(
                    d, 80, ap.SolverConfig(alpha=alpha))
                rep = an.verify_concavity(vf)
                assert rep.holds, (p, alpha, rep.witness)


def test_criterion_9_threshold_structure_under_assumptions():
    with criterion(9, "assumption distributions: threshold optimal policies"):
        for p in (ASSUMPTION1, ASSUMPTION2):
            d = dist(p)
            vf, pol = solved(p)
            assert an.verify_threshold_in_v1(pol).holds, p
            _, dt_gain = ap.search_double_threshold(d, vf.K)
            assert abs(dt_gain - vf.gain) <= GAIN_TOL, p


def _triangle_pairs():
    for p in (ROW1, ROW2, ROW4, NECESSARY_TRUE, ASSUMPTION2):
        L = dist(p).L
        for spec in ((1, 1), (1, L), (2, max(L - 1, 1)), (4, min(2, L)),
                     (7, L)):
            yield p, DoubleThresholdSpec(*spec)


def test_criterion_10_oracle_triangle():
    with criterion(10, "chain/renewal within 1e-6 on 25 pairs; CI covers >= 23"):
        pairs = list(_triangle_pairs())
        assert len(pairs) == 25
        covered = 0
        for idx, (p, spec) in enumerate(pairs):
            d = dist(p)
            K = ap.default_age_cap(d)
            pol = ap.double_threshold(spec, K, d.L)
            chain = ap.exact_average_age(pol, d, K).average_age
            renewal = ap.renewal_reward_age(spec, d).average_age
            assert abs(chain - renewal) < 1e-6, (p, spec)
            mc, _ = ap.simulate(pol, d, horizon=20_000, replications=8,
                                seed=1000 + idx)
            if abs(mc.average_age - chain) <= mc.detail["ci_halfwidth"]:
                covered += 1
        assert covered >= 23, f"CI covered the chain value in {covered}/25"


def test_criterion_11_truncation_robustness():
    with criterion(11, "doubling the age cap moves no gain by more than 1e-6"):
        for p in (ROW1, ROW2, ROW3, ROW4):
            d = dist(p)
            K = ap.default_age_cap(d)
            base, _ = ap.relative_value_iteration(d, K)
            doubled, _ = ap.relative_value_iteration(d, 2 * K)
            assert abs(base.gain - doubled.gain) < 1e-6, p
