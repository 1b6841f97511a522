"""Compiled inner loops: coupling assembly and the amplitude flow.

These run a few million times per sweep on matrices of size 2..14, where
numpy call overhead would dominate.  The readable reference versions live in
:mod:`cctunnel.matelem` and are checked against these in the tests.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _clamp(v, d):
    return min(max(v, 0.0), d)


@njit(cache=True)
def _primitive(t, i, j):
    # int_0^{t d} phi_i phi_j dy
    if i == j:
        return t - math.sin(2.0 * math.pi * i * t) / (2.0 * math.pi * i)
    return (math.sin(math.pi * (i - j) * t) / (math.pi * (i - j))
            - math.sin(math.pi * (i + j) * t) / (math.pi * (i + j)))


@njit(cache=True)
def coupling_into(x, a, b, d, l, u, V0, scale, paper_code, n, out):
    """Fill ``out`` (2n x 2n) with v(x); see ``matelem.CouplingMatrix``."""
    shift = d / 2 - l
    lo1 = _clamp(2 * x - a + shift, d) / d
    hi1 = _clamp(2 * x + a + shift, d) / d
    lo2 = _clamp(-2 * x - a + shift, d) / d
    hi2 = _clamp(-2 * x + a + shift, d) / d
    lof = 0.0
    hif = 0.0
    if u > 0:
        flo = 2 * (x - b)
        fhi = 2 * (x + b)
        if paper_code:
            flo = max(flo, l - d / 2)
            fhi = min(fhi, l + d / 2)
        else:
            flo = _clamp(flo - l + d / 2, d)
            fhi = _clamp(fhi - l + d / 2, d)
        if fhi > flo:
            lof = flo / d
            hif = fhi / d
    for i in range(n):
        for j in range(i, n):
            ii = i + 1
            jj = j + 1
            w = 0.0
            if hi1 > lo1:
                w += _primitive(hi1, ii, jj) - _primitive(lo1, ii, jj)
            if hi2 > lo2:
                w += _primitive(hi2, ii, jj) - _primitive(lo2, ii, jj)
            w *= scale * V0
            f = 0.0
            if hif > lof:
                f = -scale * u * (_primitive(hif, ii, jj) - _primitive(lof, ii, jj))
            out[i, j] = out[j, i] = w
            out[n + i, n + j] = out[n + j, n + i] = w
            out[i, n + j] = out[n + j, i] = f
            out[n + i, j] = out[j, n + i] = f


@njit(cache=True)
def amplitude_flow(x, k, v, RT, out):
    """Stacked derivative of ``[R; T]`` (shape (2N, N)) given the coupling ``v``."""
    N = k.size
    ep = np.empty(N, np.complex128)
    em = np.empty(N, np.complex128)
    for m in range(N):
        ep[m] = complex(math.cos(k[m] * x), math.sin(k[m] * x))
        em[m] = ep[m].conjugate()
    psi = np.empty((N, N), np.complex128)
    for m in range(N):
        for c in range(N):
            psi[m, c] = em[m] * RT[m, c]
        psi[m, m] += ep[m]
    src = np.zeros((N, N), np.complex128)
    for j in range(N):
        pref = 1.0 / (2j * k[j])
        for c in range(N):
            acc = 0j
            for m in range(N):
                acc += v[j, m] * psi[m, c]
            src[j, c] = pref * acc
    for r in range(2 * N):
        for c in range(N):
            acc = 0j
            for j in range(N):
                acc += RT[r, j] * em[j] * src[j, c]
            if r < N:
                acc += ep[r] * src[r, c]
            out[r, c] = -acc
