"""Problem parameters, internal-mode channels and the integration domain.

Units are whatever the caller uses consistently; the usual choice is
``m = hbar = V0 = 1``.  The relative coordinate ``y`` is shifted so that the
infinite well occupies ``[0, d]``; the interparticle distance is
``y + l - d/2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

UP = 0
DOWN = 1
SPIN_LABELS = {UP: "+", DOWN: "-"}


class Convention(str, enum.Enum):
    """Field-window and integration-domain conventions.

    ``PAPER_CODE`` follows the original reference implementation: the
    domain half-width uses ``max(a, b)`` and the field window is taken in the
    unshifted interparticle distance.  ``DERIVED``
    uses the shifted coordinate consistently and puts the domain edge where
    every coupling vanishes.
    """

    PAPER_CODE = "paper-code"
    DERIVED = "derived"


class InvalidEnergyError(ValueError):
    """Raised when no internal channel is open at the requested energy."""


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float
    d: float
    l: float
    u: float
    V0: float = 1.0
    m: float = 1.0
    hbar: float = 1.0
    n_max: int = 7
    convention: Convention = Convention.PAPER_CODE

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention(self.convention))
        checks = [
            ("a", self.a > 0),
            ("b", self.b >= 0),
            ("d", self.d > 0),
            ("l", self.l >= 0),
            ("u", self.u >= 0),
            ("V0", self.V0 > 0),
            ("m", self.m > 0),
            ("hbar", self.hbar > 0),
            ("n_max", int(self.n_max) == self.n_max and self.n_max >= 1),
        ]
        for name, ok in checks:
            if not ok:
                raise ValueError(f"invalid model parameter {name}={getattr(self, name)!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def coupling_scale(self) -> float:
        """Prefactor ``4m/hbar**2`` turning energies into ``1/length**2``."""
        return 4.0 * self.m / self.hbar**2

    def as_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "d": self.d, "l": self.l, "u": self.u,
            "V0": self.V0, "m": self.m, "hbar": self.hbar,
            "n_max": self.n_max, "convention": self.convention.value,
        }


@dataclass(frozen=True)
class ChannelSet:
    """Open internal channels at total energy ``E``.

    Composite states are ordered spin-major: index ``c = spin * n_open + (j - 1)``
    for channel ``j`` in ``1..n_open`` and spin ``UP``/``DOWN``.
    """

    E: float
    epsilon: np.ndarray
    k: np.ndarray
    n_open: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_open", len(self.k))

    @property
    def size(self) -> int:
        return 2 * self.n_open

    @property
    def k_composite(self) -> np.ndarray:
        """Wave number of every composite state (spin does not change ``k``)."""
        return np.tile(self.k, 2)

    def composite_index(self, j: int, spin: int) -> int:
        if not 1 <= j <= self.n_open:
            raise IndexError(f"channel {j} is not open (n_open={self.n_open})")
        if spin not in (UP, DOWN):
            raise ValueError(f"spin must be UP or DOWN, got {spin!r}")
        return spin * self.n_open + (j - 1)

    def channel_spin(self, c: int) -> tuple[int, int]:
        if not 0 <= c < self.size:
            raise IndexError(c)
        spin, j0 = divmod(c, self.n_open)
        return j0 + 1, spin


@dataclass(frozen=True)
class Domain:
    x_left: float
    x_right: float

    @property
    def length(self) -> float:
        return self.x_right - self.x_left


def channel_energies(params: ModelParams, j) -> float:
    """Internal-mode energy ``hbar^2 j^2 pi^2 / (m d^2)``; ``j`` may be an array."""
    return params.hbar**2 * np.square(j) * math.pi**2 / (params.m * params.d**2)


def open_channels(params: ModelParams, E: float) -> ChannelSet:
    j = np.arange(1, params.n_max + 1)
    eps = channel_energies(params, j)
    if not E > eps[0]:
        raise InvalidEnergyError(
            f"E={E!r} does not exceed the lowest channel energy {eps[0]!r}"
        )
    eps = eps[eps < E]
    k = (2.0 / params.hbar) * np.sqrt(params.m * (E - eps))
    return ChannelSet(E=float(E), epsilon=eps, k=k)


def integration_domain(params: ModelParams) -> Domain:
    a, b, d, l = params.a, params.b, params.d, params.l
    if params.convention is Convention.PAPER_CODE:
        x_right = (2 * max(a, b) + 2 * l + d) / 4
    else:
        x_right = max((2 * a + 2 * l + d) / 4, b + (2 * l + d) / 4)
    return Domain(-x_right, x_right)
