import numpy as np
import pytest

import aoipreempt as ap
from aoipreempt import EMPTY, Action, State
from aoipreempt.errors import NoConvergence
from common import ROW1, ROW2, ROW3, ROW4, REFERENCE_GAINS, dist, solved


def test_deterministic_service_gain():
    d = dist((1.0,))
    vf, pol = ap.relative_value_iteration(d, 10)
    assert vf.gain == pytest.approx(1.0, abs=1e-9)
    # confirm through the chain evaluation, not just the solver
    assert ap.exact_average_age(pol, d, 10).average_age == pytest.approx(1.0)


@pytest.mark.parametrize("p,K", [(ROW1, 100), (ROW2, 100), (ROW3, 200),
                                 (ROW4, 100)])
def test_reference_gains_at_stated_caps(p, K):
    vf, _ = solved(p, K)
    assert vf.gain == pytest.approx(REFERENCE_GAINS[p][0], abs=5e-3)


def test_reference_state_value_is_zero():
    vf, _ = solved(ROW1)
    assert vf[State(1, EMPTY)] == 0.0
    assert vf.gain > 0


def test_gain_invariant_to_initial_values():
    d = dist(ROW1)
    K = 60
    base, _ = ap.relative_value_iteration(d, K)
    rng = np.random.default_rng(3)
    cfg = ap.SolverConfig(initial_values=rng.uniform(-5, 5, (K + 1, d.L + 1)))
    other, _ = ap.relative_value_iteration(d, K, cfg)
    assert abs(base.gain - other.gain) < 1e-8


@pytest.mark.parametrize("p", [ROW1, ROW2, ROW4])
def test_values_monotone_in_monitor_age(p):
    vf, _ = solved(p)
    d = dist(p)
    for col in range(0, d.L):
        lo = 1 if col == 0 else col
        column = vf.grid[lo:vf.K + 1, col]
        assert np.all(np.diff(column) >= -1e-9)


@pytest.mark.parametrize("p", [ROW1, ROW2, ROW3, ROW4])
def test_greedy_policy_achieves_the_gain(p):
    vf, pol = solved(p)
    exact = ap.exact_average_age(pol, dist(p), vf.K).average_age
    assert abs(exact - vf.gain) < 1e-6


@pytest.mark.parametrize("p", [ROW1, ROW2, ROW3, ROW4])
def test_optimal_policy_never_idles(p):
    _, pol = solved(p)
    assert all(a != Action.IDLE for s, a in pol.items() if s.empty)


def test_discounted_geometric_series():
    # Single-slot service pins the chain at (1, EMPTY): the fixed point of
    # the recursion is sum_{t>=0} alpha^t = 1/(1-alpha); counting costs
    # only from the next slot on gives sum_{t>=1} alpha^t = V - C = 1.
    d = dist((1.0,))
    vf = ap.discounted_value_iteration(d, 3, ap.SolverConfig(alpha=0.5))
    v_ref = vf[State(1, EMPTY)]
    assert v_ref == pytest.approx(2.0, abs=1e-9)
    assert v_ref - 1.0 == pytest.approx(1.0, abs=1e-9)


def test_discounted_contraction_rate():
    d = dist(ROW1)
    K, L = 40, d.L
    q = d.padded_hazards()
    from aoipreempt.backend import kernels
    from aoipreempt.mdp import valid_mask
    alpha = 0.8
    v = np.zeros((K + 1, L + 1))
    prev_step = None
    flat = np.flatnonzero(valid_mask(K, L).ravel())
    for _ in range(30):
        V, _, _, _ = kernels.dvi_sweep(v, q, K, L, alpha)
        step = np.abs((V - v).ravel()[flat]).max()
        if prev_step is not None and prev_step > 0:
            assert step <= alpha * prev_step + 1e-12
        prev_step = step
        v = V


def test_discounted_requires_valid_alpha():
    with pytest.raises(ValueError):
        ap.discounted_value_iteration(dist(ROW1), 50, ap.SolverConfig(alpha=1.2))
    with pytest.raises(ValueError):
        ap.discounted_value_iteration(dist(ROW1), 50, ap.SolverConfig())


def test_extract_policy_tie_prefers_idle():
    d = dist(ROW1)
    K = 20
    vf = ap.ValueFunction(kind="relative", grid=np.zeros((K + 1, d.L + 1)),
                          K=K, L=d.L, iterations=0, span_residual=0.0, gain=1.0)
    pol = ap.extract_policy(vf, d)
    assert pol.action(State(5, EMPTY)) == Action.IDLE


def test_extract_policy_matches_solver_output():
    d = dist(ROW1)
    vf, pol = ap.relative_value_iteration(d, 70)
    again = ap.extract_policy(vf, d)
    assert pol.table_equal(again)


def test_optimal_policy_structure_examples():
    # fresh samples dominate aged packets at packet age 1 here
    _, pol = solved(ROW2)
    assert all(pol.grid[v1, 1] == int(Action.SAMPLE)
               for v1 in range(1, pol.K + 1))
    # strict improvement over always-preempt requires some CONTINUE
    vf, pol1 = solved(ROW1)
    always = ap.always_preempt(pol1.K, pol1.L)
    assert not pol1.table_equal(always)


def test_no_convergence_raises():
    with pytest.raises(NoConvergence) as exc:
        ap.relative_value_iteration(dist(ROW1), 60,
                                    ap.SolverConfig(max_iterations=3))
    assert exc.value.iterations == 3
    assert exc.value.residual > 0


def test_trace_hooks_observe_each_sweep():
    trace = ap.RviTrace()
    cfg = ap.SolverConfig(trace_hooks=(trace,))
    vf, _ = ap.relative_value_iteration(dist(ROW2), 60, cfg)
    assert len(trace) == vf.iterations
    ns = [snap.n for snap in trace]
    assert ns == list(range(1, vf.iterations + 1))
    snap = trace.snapshots[-1]
    assert not snap.values.flags.writeable
    assert snap.q_continue.shape == snap.values.shape


def test_solver_report_fields():
    d = dist(ROW2)
    cfg = ap.SolverConfig()
    vf, pol = ap.relative_value_iteration(d, 60, cfg)
    rep = ap.solver_report(d, vf, pol, cfg)
    assert set(rep) >= {"gain", "iterations", "span_residual", "K", "tol",
                        "policy", "value"}
    assert rep["value"]["1:E"] == 0.0
    assert rep["policy"]["1:E"] == int(Action.SAMPLE)


def test_value_csv_dump(tmp_path):
    d = dist(ROW2)
    vf, _ = ap.relative_value_iteration(d, 60)
    path = tmp_path / "values.csv"
    ap.solvers.value_csv(vf, str(path))
    header, *rows = path.read_text().strip().splitlines()
    assert header == "v1,v2,value"
    assert len(rows) == sum(1 for _ in vf.items())
    first = rows[0].split(",")
    assert first[:2] == ["1", "1"]
