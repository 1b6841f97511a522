"""Independent reference solutions.

* :func:`transfer_matrix_solve` - the same coupled-channel problem with the
  coupling replaced by a piecewise-constant approximation, solved exactly on
  every segment and glued together by scattering-matrix composition.
* :func:`analytic_single_barrier` - textbook rectangular-barrier transmission.
* :func:`larmor_flip_analytic` - spin-flip probability from precession in a
  uniform transverse field, ignoring reflections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .matelem import CouplingMatrix, coupling_breakpoints
from .model import (Convention, Domain, ModelParams, channel_energies,
                    integration_domain, open_channels)
from .vra import SUSPECT_DEFECT, ScatteringRecord, make_record

# |lambda h^2| below which cosh/sinh are replaced by their Taylor series
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class Segmentation:
    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing with at least two entries")
        object.__setattr__(self, "breakpoints", bp)

    @property
    def n_segments(self) -> int:
        return self.breakpoints.size - 1

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[1:] + self.breakpoints[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def refined(self) -> "Segmentation":
        """Every segment split in half."""
        bp = self.breakpoints
        out = np.empty(2 * bp.size - 1)
        out[0::2] = bp
        out[1::2] = 0.5 * (bp[1:] + bp[:-1])
        return Segmentation(out)

    @classmethod
    def uniform(cls, domain: Domain, n_segments: int = 2000,
                params: Optional[ModelParams] = None):
        """Uniform partition of ``domain``.

        With ``params`` the kinks of the coupling are added as extra
        breakpoints, so that every segment sees a smooth coupling.
        """
        bp = np.linspace(domain.x_left, domain.x_right, n_segments + 1)
        if params is not None:
            kinks = coupling_breakpoints(params)
            kinks = kinks[(kinks > domain.x_left) & (kinks < domain.x_right)]
            bp = np.union1d(bp, kinks)
            # drop slivers created by kinks that nearly coincide with grid points
            keep = np.concatenate([[True], np.diff(bp) > 1e-9 * domain.length])
            bp = bp[keep]
            bp[-1] = domain.x_right
        return cls(bp)


def _cosh_sinh(lam, h):
    """``cosh(sqrt(lam) h)``, ``sinh(sqrt(lam) h)/sqrt(lam)`` and ``sqrt(lam) sinh(sqrt(lam) h)``.

    Real for either sign of ``lam``; a series branch handles ``lam h^2 -> 0``.
    """
    z = lam * h**2
    c = np.empty_like(z)
    s = np.empty_like(z)
    small = np.abs(z) < _SERIES_CUTOFF
    pos = (z > 0) & ~small
    neg = (z < 0) & ~small
    zs = z[small]
    c[small] = 1 + zs / 2 + zs**2 / 24 + zs**3 / 720
    s[small] = 1 + zs / 6 + zs**2 / 120 + zs**3 / 5040
    r = np.sqrt(z[pos])
    c[pos] = np.cosh(r)
    s[pos] = np.sinh(r) / r
    r = np.sqrt(-z[neg])
    c[neg] = np.cos(r)
    s[neg] = np.sin(r) / r
    hh = np.broadcast_to(h, z.shape)
    return c, hh * s, lam * hh * s


def _segment_smatrices(A, h, k):
    """Scattering matrices of slabs with constant ``psi'' = A psi``.

    Amplitudes are referred to local plane waves at each slab face:
    ``psi = c_plus + c_minus``, ``psi' = i k (c_plus - c_minus)``.  Returns
    ``(t, r, tp, rp)`` stacked over segments, with
    ``c_plus_right = t c_plus_left + rp c_minus_right`` and
    ``c_minus_left = r c_plus_left + tp c_minus_right``.
    """
    lam, Q = np.linalg.eigh(A)
    c, s, ls = _cosh_sinh(lam, h[:, None])
    Qt = np.swapaxes(Q, -1, -2)

    def rotate(diag):
        return (Q * diag[:, None, :]) @ Qt

    C, S, LS = rotate(c), rotate(s), rotate(ls)
    # transfer matrix on (psi, psi') is [[C, S], [LS, C]]; change to (c_plus, c_minus)
    ik = 1j * k
    # P = [[I, I], [iK, -iK]],  P^-1 = 1/2 [[I, -i K^-1], [I, i K^-1]]
    CP = C + S * ik[None, None, :]
    CM = C - S * ik[None, None, :]
    DP = LS + C * ik[None, None, :]
    DM = LS - C * ik[None, None, :]
    inv_ik = (1.0 / ik)[None, :, None]
    M11 = 0.5 * (CP + inv_ik * DP)
    M12 = 0.5 * (CM + inv_ik * DM)
    M21 = 0.5 * (CP - inv_ik * DP)
    M22 = 0.5 * (CM - inv_ik * DM)
    M22inv = np.linalg.inv(M22)
    r = -M22inv @ M21
    t = M11 + M12 @ r
    return t, r, M22inv, M12 @ M22inv


def _star(left, right):
    """Redheffer star product of stacked scattering matrices (left then right)."""
    t1, r1, tp1, rp1 = left
    t2, r2, tp2, rp2 = right
    eye = np.eye(t1.shape[-1])
    inner = np.linalg.inv(eye - rp1 @ r2)
    t = t2 @ inner @ t1
    rp = rp2 + t2 @ inner @ rp1 @ tp2
    inner2 = np.linalg.inv(eye - r2 @ rp1)
    r = r1 + tp1 @ r2 @ inner @ t1
    tp = tp1 @ inner2 @ tp2
    return t, r, tp, rp


def _compose(parts):
    # pairwise tree reduction keeps the work vectorised across segments
    while parts[0].shape[0] > 1:
        n = parts[0].shape[0]
        if n % 2:
            tail = [p[-1:] for p in parts]
            parts = [p[:-1] for p in parts]
        else:
            tail = None
        left = [p[0::2] for p in parts]
        right = [p[1::2] for p in parts]
        parts = list(_star(left, right))
        if tail is not None:
            parts = [np.concatenate([p, q]) for p, q in zip(parts, tail)]
    return [p[0] for p in parts]


def _piecewise_amplitudes(seg: Segmentation, coupling, k):
    A = np.stack([coupling(x) for x in seg.midpoints]) - np.diag(k**2)
    t, r, _, _ = _compose(list(_segment_smatrices(A, seg.widths, k)))
    xl, xr = seg.breakpoints[0], seg.breakpoints[-1]
    phase_l = np.exp(1j * k * xl)
    R = phase_l[:, None] * r * phase_l[None, :]
    T = np.exp(-1j * k * xr)[:, None] * t * phase_l[None, :]
    return R, T


def transfer_matrix_solve(
    E: float,
    params: ModelParams,
    seg: Optional[Segmentation] = None,
    domain: Optional[Domain] = None,
    extrapolate: bool = True,
    suspect_threshold: float = SUSPECT_DEFECT,
) -> ScatteringRecord:
    """Scattering record from the piecewise-constant coupling on ``seg``.

    Amplitudes use the same global phase convention as the variable
    amplitude solver (``psi = exp(ikx) + R exp(-ikx)`` on the left,
    ``T exp(ikx)`` on the right), so ``R`` and ``T`` are directly comparable.

    Midpoint sampling is second order in the segment width.  With
    ``extrapolate`` the amplitudes on ``seg`` and on its halving are combined
    by Richardson extrapolation, which removes the leading error term when
    every segment sees a smooth coupling (the default segmentation
    guarantees this by including the kinks as breakpoints).
    """
    channels = open_channels(params, E)
    domain = domain or integration_domain(params)
    if seg is None:
        seg = Segmentation.uniform(domain, params=params)
    k = channels.k_composite
    coupling = CouplingMatrix.for_channels(channels, params)
    R, T = _piecewise_amplitudes(seg, coupling, k)
    if extrapolate:
        R_fine, T_fine = _piecewise_amplitudes(seg.refined(), coupling, k)
        R = (4 * R_fine - R) / 3
        T = (4 * T_fine - T) / 3
    return make_record(params, channels, R, T, None, suspect_threshold)


def analytic_single_barrier(E, mass, height, width, hbar=1.0) -> float:
    """Transmission probability through a rectangular barrier."""
    if not E > 0:
        raise ValueError("E must be positive")
    if width == 0:
        return 1.0
    if E == height:
        return 1.0 / (1.0 + mass * height * width**2 / (2 * hbar**2))
    if E < height:
        kappa = math.sqrt(2 * mass * (height - E)) / hbar
        return 1.0 / (1.0 + height**2 * math.sinh(kappa * width) ** 2 / (4 * E * (height - E)))
    q = math.sqrt(2 * mass * (E - height)) / hbar
    return 1.0 / (1.0 + height**2 * math.sin(q * width) ** 2 / (4 * E * (E - height)))


def larmor_length(params: ModelParams) -> float:
    """Length of field traversed by a point-like particle inside the domain."""
    if params.convention is Convention.PAPER_CODE:
        return params.b + params.l + params.d / 2
    return 2 * params.b


def larmor_flip_analytic(E, params: ModelParams, L_eff: Optional[float] = None) -> float:
    """Spin-flip probability after precessing through a field region of length ``L_eff``.

    The two spin-x components propagate with ``k_pm = sqrt(k1^2 pm 4 m u / hbar^2)``;
    the barrier and reflections at the field edges are ignored.
    """
    channels = open_channels(params, E)
    if channels.n_open != 1:
        raise ValueError("the precession formula assumes a single open channel")
    if not params.u < E - channels.epsilon[0]:
        raise ValueError("u must be below E - eps_1 for both spin branches to propagate")
    if L_eff is None:
        L_eff = larmor_length(params)
    return math.sin(float(precession_wavenumber(E, params)) * L_eff / 2) ** 2


def precession_wavenumber(E, params: ModelParams):
    """``k_plus - k_minus`` for the two spin-x branches of the lowest channel.

    Vectorised over ``E``; NaN where the lower branch does not propagate.
    Spin-flip zeros are evenly spaced in this variable, ``2 pi / L_eff`` apart.
    """
    k1_sq = 4 * params.m * (np.asarray(E, float) - channel_energies(params, 1)) / params.hbar**2
    shift = params.coupling_scale * params.u
    with np.errstate(invalid="ignore"):
        return np.sqrt(k1_sq + shift) - np.sqrt(k1_sq - shift)


def single_channel_threshold(params: ModelParams, j: int = 2) -> float:
    """Opening energy of channel ``j`` above the first one, in units of ``V0``."""
    return float((channel_energies(params, j) - channel_energies(params, 1)) / params.V0)
