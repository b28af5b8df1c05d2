"""Numba-jitted kernel implementations.

Same contracts as ``_kernels_py``; see that module for the grid layout.
No fastmath: results must match the numpy backend bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND_NAME = "numba"


@njit(cache=True)
def rvi_sweep(h, q, K, L):
    V = np.zeros((K + 1, L + 1))
    Qi = np.zeros(K + 1)
    Qs = np.zeros(K + 1)
    Qc = np.zeros((K + 1, L + 1))
    h1e = h[1, 0]
    q1 = q[1]
    for v1 in range(1, K + 1):
        nv1 = v1 + 1 if v1 < K else K
        qs = v1 + (q1 * h1e + (1.0 - q1) * h[nv1, 1])
        qi = v1 + h[nv1, 0]
        Qs[v1] = qs
        Qi[v1] = qi
        V[v1, 0] = qi if qi <= qs else qs
        vmax = L - 1 if L - 1 < v1 else v1
        for v2 in range(1, vmax + 1):
            qk = q[v2 + 1]
            qc = v1 + (qk * h[v2 + 1, 0] + (1.0 - qk) * h[nv1, v2 + 1])
            Qc[v1, v2] = qc
            V[v1, v2] = qs if qs <= qc else qc
    return V, Qi, Qs, Qc


@njit(cache=True)
def dvi_sweep(v, q, K, L, alpha):
    V = np.zeros((K + 1, L + 1))
    Qi = np.zeros(K + 1)
    Qs = np.zeros(K + 1)
    Qc = np.zeros((K + 1, L + 1))
    v1e = v[1, 0]
    q1 = q[1]
    for v1 in range(1, K + 1):
        nv1 = v1 + 1 if v1 < K else K
        qs = v1 + alpha * (q1 * v1e + (1.0 - q1) * v[nv1, 1])
        qi = v1 + alpha * v[nv1, 0]
        Qs[v1] = qs
        Qi[v1] = qi
        V[v1, 0] = qi if qi <= qs else qs
        vmax = L - 1 if L - 1 < v1 else v1
        for v2 in range(1, vmax + 1):
            qk = q[v2 + 1]
            qc = v1 + alpha * (qk * v[v2 + 1, 0] + (1.0 - qk) * v[nv1, v2 + 1])
            Qc[v1, v2] = qc
            V[v1, v2] = qs if qs <= qc else qc
    return V, Qi, Qs, Qc


@njit(cache=True)
def simulate_slots(actions, q, K, L, u, v1_0, v2_0, ages, s_out, d_out, m_out):
    v1 = v1_0
    v2 = v2_0
    ndel = 0
    samples = 1 if v2 > 0 else 0
    for i in range(u.shape[0]):
        t = i + 1
        ages[i] = v1
        a = actions[v1, v2]
        ut = u[i]
        if a == 0:
            v1 = v1 + 1 if v1 < K else K
            v2 = 0
        elif a == 1:
            samples += 1
            if ut < q[1]:
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
            if ut < q[v2 + 1]:
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
