"""Variable reflection amplitude solver for the coupled-channel problem.

For the truncated coupling that acts only to the right of ``x``, the
reflection and transmission amplitude matrices obey (row = outgoing,
column = incident, ``E_pm = diag(exp(+-i k x))``, ``D = diag(1/(2 i k))``)::

    Psi   = E_p + E_m R
    dR/dx = -(E_p + R E_m) D v Psi
    dT/dx = -T E_m D v Psi

with ``R = 0`` and ``T = 1`` at the right edge of the domain.  Integrating to
the left edge gives the amplitudes of the full problem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import amplitude_flow
from .matelem import CouplingMatrix
from .model import ChannelSet, Domain, ModelParams, integration_domain, open_channels
from .odeint import IntegrationReport, IntegratorConfig, integrate

SUSPECT_DEFECT = 1e-4


@dataclass
class AmplitudeMatrices:
    R: np.ndarray
    T: np.ndarray
    x: float

    @classmethod
    def initial(cls, size: int, x: float):
        return cls(np.zeros((size, size), complex), np.eye(size, dtype=complex), x)

    def pack(self) -> np.ndarray:
        """Flatten to ``[R.ravel(), T.ravel()]`` (row-major), the integrator state."""
        return np.concatenate([self.R.ravel(), self.T.ravel()])

    @classmethod
    def unpack(cls, state: np.ndarray, x: float):
        size = int(round(np.sqrt(state.size // 2)))
        half = size * size
        return cls(state[:half].reshape(size, size), state[half:].reshape(size, size), x)


@dataclass
class ScatteringRecord:
    params: ModelParams
    E: float
    channels: ChannelSet
    R: np.ndarray
    T: np.ndarray
    P_r: np.ndarray
    P_t: np.ndarray
    unitarity_defect: float
    report: Optional[IntegrationReport] = None
    suspect: bool = field(default=False)

    def transmission(self, out_channel, out_spin, in_channel, in_spin) -> float:
        c = self.channels.composite_index
        return float(self.P_t[c(out_channel, out_spin), c(in_channel, in_spin)])

    def reflection(self, out_channel, out_spin, in_channel, in_spin) -> float:
        c = self.channels.composite_index
        return float(self.P_r[c(out_channel, out_spin), c(in_channel, in_spin)])


class AmplitudeRHS:
    """Right-hand side of the amplitude equations on the packed state.

    The packed state is ``[R.ravel(), T.ravel()]``, i.e. the row-major
    flattening of ``R`` stacked on top of ``T``.
    """

    def __init__(self, channels: ChannelSet, params: ModelParams):
        self.k = np.ascontiguousarray(channels.k_composite, dtype=float)
        self.size = channels.size
        self.coupling = CouplingMatrix.for_channels(channels, params)
        self._v = np.empty((self.size, self.size))

    def derivative(self, x, R, T):
        out = self(x, np.concatenate([np.ravel(R), np.ravel(T)]).astype(complex))
        half = self.size * self.size
        return out[:half].reshape(R.shape), out[half:].reshape(T.shape)

    def __call__(self, x, state):
        n = self.size
        out = np.empty((2 * n, n), complex)
        amplitude_flow(x, self.k, self.coupling(x, self._v), state.reshape(2 * n, n), out)
        return out.ravel()


def amplitude_rhs(x, state: AmplitudeMatrices, channels: ChannelSet, params: ModelParams):
    """Derivatives ``(dR/dx, dT/dx)`` at ``x`` for the given amplitudes."""
    return AmplitudeRHS(channels, params).derivative(x, state.R, state.T)


def probabilities(final: AmplitudeMatrices, channels: ChannelSet):
    """Flux-weighted probabilities ``P[n, l] = (k_n / k_l) |A[n, l]|^2``."""
    k = channels.k_composite
    weight = k[:, None] / k[None, :]
    return weight * np.abs(final.R) ** 2, weight * np.abs(final.T) ** 2


def unitarity_defect(P_r, P_t) -> float:
    return float(np.max(np.abs(1.0 - (P_r + P_t).sum(axis=0))))


def make_record(params, channels, R, T, report=None, suspect_threshold=SUSPECT_DEFECT):
    P_r, P_t = probabilities(AmplitudeMatrices(R, T, 0.0), channels)
    defect = unitarity_defect(P_r, P_t)
    return ScatteringRecord(
        params=params, E=channels.E, channels=channels, R=R, T=T, P_r=P_r, P_t=P_t,
        unitarity_defect=defect, report=report, suspect=bool(defect > suspect_threshold),
    )


def solve_amplitudes(
    E: float,
    params: ModelParams,
    config: IntegratorConfig = IntegratorConfig(),
    domain: Optional[Domain] = None,
    suspect_threshold: float = SUSPECT_DEFECT,
) -> ScatteringRecord:
    """Scattering amplitudes and probabilities at total energy ``E``.

    Integrates the amplitude equations from the right edge of the domain to
    the left edge.  Integrator failures propagate; a unitarity defect above
    ``suspect_threshold`` only marks the record as suspect.
    """
    channels = open_channels(params, E)
    domain = domain or integration_domain(params)
    rhs = AmplitudeRHS(channels, params)
    start = AmplitudeMatrices.initial(channels.size, domain.x_right)
    state, report = integrate(rhs, (domain.x_right, domain.x_left), start.pack(), config)
    final = AmplitudeMatrices.unpack(state, domain.x_left)
    record = make_record(params, channels, final.R, final.T, report, suspect_threshold)
    if record.suspect:
        warnings.warn(
            f"unitarity defect {record.unitarity_defect:.2e} at E={E!r}", RuntimeWarning,
            stacklevel=2,
        )
    return record
