"""Pure-numpy kernel implementations.

Drop-in fallback for ``_kernels_jit``.  Every arithmetic expression is
written with the same per-element operation order as the jitted loops so
the two backends produce bit-identical float64 results.

Grid layout: float64 arrays of shape (K+1, L+1); row index is the monitor
age v1 (row 0 unused), column 0 holds the EMPTY states, columns 1..L-1
the busy states, and column L is zero padding so ``v2 + 1`` can be
indexed unconditionally (its coefficient ``1 - q_L`` is exactly 0).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def rvi_sweep(h, q, K, L):
    """One synchronous average-cost Bellman sweep over the previous h.

    Returns (V, Qi, Qs, Qc): the swept values and the per-action lookahead
    costs (Qi and Qs indexed by v1 only; Qs does not depend on v2).
    Entries at invalid grid slots are 0.
    """
    v1 = np.arange(1.0, K + 1)
    nv1 = np.minimum(np.arange(2, K + 2), K)
    hn = h[nv1]
    q1 = q[1]

    qs = v1 + (q1 * h[1, 0] + (1.0 - q1) * hn[:, 1])
    qi = v1 + hn[:, 0]

    V = np.zeros((K + 1, L + 1))
    Qi = np.zeros(K + 1)
    Qs = np.zeros(K + 1)
    Qc = np.zeros((K + 1, L + 1))
    Qi[1:] = qi
    Qs[1:] = qs
    V[1:, 0] = np.minimum(qi, qs)

    if L > 1:
        qcols = q[2:L + 1]
        deliver = qcols * h[2:L + 1, 0]
        qc = v1[:, None] + (deliver[None, :] + (1.0 - qcols)[None, :] * hn[:, 2:L + 1])
        Qc[1:, 1:L] = qc
        V[1:, 1:L] = np.minimum(qs[:, None], qc)
        for v2 in range(2, L):  # blank the v1 < v2 corner
            V[1:v2, v2] = 0.0
            Qc[1:v2, v2] = 0.0
    return V, Qi, Qs, Qc


def dvi_sweep(v, q, K, L, alpha):
    """One synchronous discounted Bellman sweep; same layout as rvi_sweep."""
    v1 = np.arange(1.0, K + 1)
    nv1 = np.minimum(np.arange(2, K + 2), K)
    vn = v[nv1]
    q1 = q[1]

    qs = v1 + alpha * (q1 * v[1, 0] + (1.0 - q1) * vn[:, 1])
    qi = v1 + alpha * vn[:, 0]

    V = np.zeros((K + 1, L + 1))
    Qi = np.zeros(K + 1)
    Qs = np.zeros(K + 1)
    Qc = np.zeros((K + 1, L + 1))
    Qi[1:] = qi
    Qs[1:] = qs
    V[1:, 0] = np.minimum(qi, qs)

    if L > 1:
        qcols = q[2:L + 1]
        deliver = qcols * v[2:L + 1, 0]
        qc = v1[:, None] + alpha * (deliver[None, :]
                                    + (1.0 - qcols)[None, :] * vn[:, 2:L + 1])
        Qc[1:, 1:L] = qc
        V[1:, 1:L] = np.minimum(qs[:, None], qc)
        for v2 in range(2, L):
            V[1:v2, v2] = 0.0
            Qc[1:v2, v2] = 0.0
    return V, Qi, Qs, Qc


def simulate_slots(actions, q, K, L, u, v1_0, v2_0, ages, s_out, d_out, m_out):
    """Slot-by-slot rollout of a table policy, one uniform draw per slot.

    The monitor age is recorded before the transition (matching the cost
    accounting of the solvers).  Delivery events are logged as
    (generation slot, slot the new age takes effect, preemptions since the
    previous delivery).  Returns (deliveries, final v1, final v2).
    """
    act = [list(map(int, row)) for row in actions]
    qs = [float(x) for x in q]
    v1 = int(v1_0)
    v2 = int(v2_0)
    ndel = 0
    samples = 1 if v2 > 0 else 0
    for i in range(u.shape[0]):
        t = i + 1
        ages[i] = v1
        a = act[v1][v2]
        ut = u[i]
        if a == 0:
            v1 = v1 + 1 if v1 < K else K
            v2 = 0
        elif a == 1:
            samples += 1
            if ut < qs[1]:
                s_out[ndel] = t
                d_out[ndel] = t + 1
                m_out[ndel] = samples - 1
                ndel += 1
                samples = 0
                v1 = 1
                v2 = 0
            else:
                v1 = v1 + 1 if v1 < K else K
                v2 = 1
        else:
            if ut < qs[v2 + 1]:
                s_out[ndel] = t - v2
                d_out[ndel] = t + 1
                m_out[ndel] = samples - 1
                ndel += 1
                samples = 0
                v1 = v2 + 1
                v2 = 0
            else:
                v1 = v1 + 1 if v1 < K else K
                v2 = v2 + 1
    return ndel, v1, v2
