"""Matrix elements of the barrier and field potentials between well eigenstates.

The well eigenfunctions are ``phi_n(y) = sqrt(2/d) sin(n pi y / d)`` on the
shifted relative coordinate ``y in [0, d]``.  Both potentials are piecewise
constant in ``y`` at fixed centre-of-mass position ``x``, so every matrix
element is a sum of closed-form overlap integrals over clamped windows.
"""

from __future__ import annotations

import numpy as np

from ._kernels import coupling_into
from .model import ChannelSet, Convention, ModelParams


def _overlap_primitive(t, n1, n2):
    """``int_0^{t d} phi_n1 phi_n2 dy`` as a function of ``t = g/d``.

    Valid for any real ``t``; broadcasting over all arguments.
    """
    return t * (np.sinc((n1 - n2) * t) - np.sinc((n1 + n2) * t))


def well_overlap_integral(amplitude, g1, g2, n1, n2, d):
    """``amplitude * int_{g1}^{g2} phi_n1(y) phi_n2(y) dy`` for ``0 <= g1 <= g2 <= d``."""
    if not 0.0 <= g1 <= g2 <= d:
        raise ValueError(f"limits must satisfy 0 <= g1 <= g2 <= d, got g1={g1}, g2={g2}, d={d}")
    if n1 < 1 or n2 < 1:
        raise ValueError("well indices start at 1")
    if g1 == g2:
        return 0.0
    return amplitude * float(
        _overlap_primitive(g2 / d, n1, n2) - _overlap_primitive(g1 / d, n1, n2)
    )


def _clamp(v, d):
    return min(max(v, 0.0), d)


def barrier_bands(x, params: ModelParams):
    """The two barrier bands in ``y``, each clamped to ``[0, d]``.

    The first band is where the constituent at ``x - r/2`` sits inside the
    barrier, the second where the one at ``x + r/2`` does (``r`` is the
    interparticle distance).  Where they overlap the potential is ``2 V0``.
    """
    a, d, l = params.a, params.d, params.l
    shift = d / 2 - l
    return (
        (_clamp(2 * x - a + shift, d), _clamp(2 * x + a + shift, d)),
        (_clamp(-2 * x - a + shift, d), _clamp(-2 * x + a + shift, d)),
    )


def field_window(x, params: ModelParams):
    """Integration limits of the field matrix element at ``x``.

    Returns ``(lo, hi)`` with ``lo == hi`` for an empty window.  In the
    paper-code convention the limits live in the unshifted interparticle
    distance and may fall outside ``[0, d]``.
    """
    b, d, l = params.b, params.d, params.l
    lo, hi = 2 * (x - b), 2 * (x + b)
    if params.convention is Convention.PAPER_CODE:
        lo, hi = max(lo, l - d / 2), min(hi, l + d / 2)
    else:
        lo, hi = _clamp(lo - l + d / 2, d), _clamp(hi - l + d / 2, d)
    if hi <= lo:
        return 0.0, 0.0
    return lo, hi


def barrier_matrix_element(i, j, x, params: ModelParams) -> float:
    """``W_ij(x)``: the barrier potential averaged between channels ``i`` and ``j``."""
    total = 0.0
    for lo, hi in barrier_bands(x, params):
        if hi > lo:
            total += well_overlap_integral(params.V0, lo, hi, i, j, params.d)
    return total


def field_matrix_element(i, j, x, params: ModelParams) -> float:
    """``F_ij(x)``: the field profile averaged between channels ``i`` and ``j``."""
    lo, hi = field_window(x, params)
    if hi == lo or params.u == 0:
        return 0.0
    d = params.d
    return params.u * float(_overlap_primitive(hi / d, i, j) - _overlap_primitive(lo / d, i, j))


def coupling_breakpoints(params: ModelParams) -> np.ndarray:
    """Sorted centre-of-mass positions where some coupling element has a kink."""
    a, b, d, l = params.a, params.b, params.d, params.l
    band = [(a + l - d / 2) / 2, (a + l + d / 2) / 2, (l - d / 2 - a) / 2, (l + d / 2 - a) / 2]
    band += [-x for x in band]
    pts = band
    if params.u > 0 and b > 0:
        pts = pts + [s * b + (l + t * d / 2) / 2 for s in (-1, 1) for t in (-1, 1)]
    return np.unique(pts)


class CouplingMatrix:
    """The ``2n x 2n`` coupling ``v(x)`` for ``n`` open channels.

    Spin-diagonal blocks carry ``(4m/hbar^2) W(x)``, spin-off-diagonal blocks
    ``-(4m/hbar^2) F(x)``.  Composite ordering follows :class:`ChannelSet`.
    Calling the object evaluates ``v`` at one position through the compiled
    kernel; :meth:`reference` builds the same matrix element by element.
    """

    def __init__(self, params: ModelParams, n_open: int):
        self.params = params
        self.n_open = n_open
        p = params
        self._args = (p.a, p.b, p.d, p.l, p.u, p.V0, p.coupling_scale,
                      p.convention is Convention.PAPER_CODE, n_open)

    @classmethod
    def for_channels(cls, channels: ChannelSet, params: ModelParams):
        return cls(params, channels.n_open)

    def __call__(self, x, out=None) -> np.ndarray:
        if out is None:
            out = np.empty((2 * self.n_open, 2 * self.n_open))
        coupling_into(float(x), *self._args, out)
        return out

    def reference(self, x) -> np.ndarray:
        n, p = self.n_open, self.params
        W = np.array([[barrier_matrix_element(i, j, x, p) for j in range(1, n + 1)]
                      for i in range(1, n + 1)])
        F = np.array([[field_matrix_element(i, j, x, p) for j in range(1, n + 1)]
                      for i in range(1, n + 1)])
        s = p.coupling_scale
        return np.block([[s * W, -s * F], [-s * F, s * W]])


def assemble_coupling(x, channels: ChannelSet, params: ModelParams) -> np.ndarray:
    return CouplingMatrix.for_channels(channels, params)(x)
