"""Parameter sweeps, the step-refinement convergence check and peak analysis."""

from __future__ import annotations

import dataclasses
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from .model import UP, InvalidEnergyError, ModelParams, channel_energies
from .odeint import IntegrationError, IntegratorConfig
from .oracle import precession_wavenumber, transfer_matrix_solve
from .vra import ScatteringRecord, solve_amplitudes

AXES = ("E", "b", "u")
SOLVERS = ("vra", "tm", "both")
THREADS_ENV = "CC_TUNNEL_THREADS"


@dataclass(frozen=True)
class SweepPlan:
    """A one-dimensional scan.

    Grid values are ``start + i * span / points`` for ``i = 1..points``.  On
    the energy axis the value is ``(E - eps_1) / V0``; on the ``b`` and ``u``
    axes the energy is fixed by ``energy`` in the same units.
    """

    params: ModelParams
    axis: str = "E"
    start: float = 0.0
    span: float = 1.0
    points: int = 800
    energy: Optional[float] = None
    incident_channel: int = 1
    incident_spin: int = UP
    solver: str = "vra"
    convergence_check: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.points < 1:
            raise ValueError("points must be at least 1")
        if self.axis != "E" and self.energy is None:
            raise ValueError(f"a sweep over {self.axis} needs a fixed energy")
        if self.incident_channel < 1 or self.incident_spin not in (0, 1):
            raise ValueError("invalid incident state")

    def values(self) -> np.ndarray:
        i = np.arange(1, self.points + 1)
        # (i * span) / points keeps shared points bit-identical when the grid is refined
        return self.start + (i * self.span) / self.points

    def point(self, value: float) -> tuple[ModelParams, float]:
        """Model parameters and total energy at one grid value."""
        params = self.params
        if self.axis == "b":
            params = dataclasses.replace(params, b=float(value))
        elif self.axis == "u":
            params = dataclasses.replace(params, u=float(value))
        offset = value if self.axis == "E" else self.energy
        return params, float(channel_energies(params, 1) + params.V0 * offset)


@dataclass
class SweepPoint:
    abscissa: float
    record: Optional[ScatteringRecord] = None
    oracle: Optional[ScatteringRecord] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def oracle_deviation(self) -> Optional[float]:
        if self.record is None or self.oracle is None:
            return None
        return float(max(np.abs(self.record.P_t - self.oracle.P_t).max(),
                         np.abs(self.record.P_r - self.oracle.P_r).max()))


@dataclass
class SweepResult:
    plan: SweepPlan
    points: list = field(default_factory=list)

    @property
    def abscissa(self) -> np.ndarray:
        return np.array([p.abscissa for p in self.points])

    def _incident(self, rec):
        return rec.channels.composite_index(self.plan.incident_channel, self.plan.incident_spin)

    def transmission(self, out_channel: int, flip: bool = False) -> np.ndarray:
        """Transmission from the incident state into ``out_channel``.

        ``flip`` selects the opposite spin.  NaN where the point failed or the
        outgoing channel is closed.
        """
        out = np.full(len(self.points), np.nan)
        spin = self.plan.incident_spin ^ int(flip)
        for n, p in enumerate(self.points):
            rec = p.record
            if rec is None or out_channel > rec.channels.n_open:
                continue
            c_out = rec.channels.composite_index(out_channel, spin)
            out[n] = rec.P_t[c_out, self._incident(rec)]
        return out

    def total(self, kind: str = "t") -> np.ndarray:
        out = np.full(len(self.points), np.nan)
        for n, p in enumerate(self.points):
            if p.record is not None:
                P = p.record.P_t if kind == "t" else p.record.P_r
                out[n] = P[:, self._incident(p.record)].sum()
        return out

    def spin_flip(self) -> np.ndarray:
        """Total transmission with the spin flipped, summed over channels."""
        out = np.full(len(self.points), np.nan)
        for n, p in enumerate(self.points):
            rec = p.record
            if rec is None:
                continue
            c_in = self._incident(rec)
            spin = 1 - self.plan.incident_spin
            cols = [rec.channels.composite_index(j, spin) for j in range(1, rec.channels.n_open + 1)]
            out[n] = rec.P_t[cols, c_in].sum()
        return out

    @property
    def unitarity_defect(self) -> np.ndarray:
        return np.array([p.record.unitarity_defect if p.record else np.nan for p in self.points])

    @property
    def suspect(self) -> np.ndarray:
        return np.array([(not p.ok) or bool(p.record.suspect) for p in self.points])

    @property
    def n_open(self) -> np.ndarray:
        return np.array([p.record.channels.n_open if p.record else 0 for p in self.points])

    @property
    def max_open(self) -> int:
        return int(self.n_open.max(initial=0))

    @property
    def failures(self) -> list:
        return [p for p in self.points if not p.ok]


def _solve_point(plan: SweepPlan, config: IntegratorConfig, value: float) -> SweepPoint:
    params, E = plan.point(value)
    point = SweepPoint(abscissa=float(value))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if plan.solver in ("vra", "both"):
                point.record = solve_amplitudes(E, params, config)
            if plan.solver in ("tm", "both"):
                point.oracle = transfer_matrix_solve(E, params)
                if point.record is None:
                    point.record = point.oracle
        if plan.incident_channel > point.record.channels.n_open:
            point.error = f"incident channel {plan.incident_channel} closed"
            point.record = point.oracle = None
    except (IntegrationError, InvalidEnergyError, np.linalg.LinAlgError, ValueError) as exc:
        point.record = point.oracle = None
        point.error = f"{type(exc).__name__}: {exc}"
    return point


def _available_cpus() -> int:
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def worker_count(requested: Optional[int] = None) -> int:
    """Worker processes to use: ``requested``, else ``CC_TUNNEL_THREADS``, else all CPUs."""
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        requested = int(env) if env else _available_cpus()
    return max(1, requested)


def run_sweep(plan: SweepPlan, config: IntegratorConfig = IntegratorConfig(),
              workers: Optional[int] = None) -> SweepResult:
    """Solve every grid point of ``plan``; failed points become gaps.

    Points are independent, so the result does not depend on ``workers``.
    """
    values = plan.values()
    workers = min(worker_count(workers), len(values))
    if workers == 1:
        points = [_solve_point(plan, config, v) for v in values]
    else:
        n = len(values)
        with ProcessPoolExecutor(workers) as pool:
            points = list(pool.map(_solve_point, [plan] * n, [config] * n, values,
                                   chunksize=max(1, n // (4 * workers))))
    return SweepResult(plan, points)


def convergence_check(plan: SweepPlan, config: IntegratorConfig = IntegratorConfig(),
                      stride: int = 10, factor: float = 5.0,
                      workers: Optional[int] = None) -> float:
    """Largest probability change when ``max_step`` is divided by ``factor``.

    Runs on every ``stride``-th grid point.  Gaps in either run are skipped.
    """
    values = plan.values()[stride - 1::stride]
    if values.size == 0:
        values = plan.values()[-1:]
    sub = dataclasses.replace(plan, solver="vra")
    fine = dataclasses.replace(config, max_step=config.max_step / factor)
    deviation = 0.0
    for v in values:
        a = _solve_point(sub, config, v)
        b = _solve_point(sub, fine, v)
        if a.record is None or b.record is None:
            continue
        deviation = max(deviation,
                        float(np.abs(a.record.P_t - b.record.P_t).max()),
                        float(np.abs(a.record.P_r - b.record.P_r).max()))
    return deviation


@dataclass
class Peak:
    position: float
    height: float
    width: float
    split_separation: Optional[float] = None
    partner: Optional[int] = None


def _refine_maximum(x, y, i):
    # vertex of the parabola through three neighbouring samples
    if i == 0 or i == len(y) - 1:
        return x[i], y[i]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return x[i], y[i]
    shift = 0.5 * (y0 - y2) / denom
    h = 0.5 * (x[i + 1] - x[i - 1])
    return x[i] + shift * h, y1 - 0.25 * (y0 - y2) * shift


def peak_analysis(result: SweepResult, prominence: float = 0.01,
                  split_window: Optional[float] = None, values=None) -> list:
    """Local maxima of the total transmission, with split pairs identified.

    Adjacent maxima closer than ``split_window`` (default ``4 u / V0``, twice
    the expected Zeeman splitting) are paired and report their separation.
    ``values`` overrides the analysed curve.
    """
    x = result.abscissa
    y = result.total("t") if values is None else np.asarray(values, dtype=float)
    mask = np.isfinite(y)
    x, y = x[mask], y[mask]
    if y.size < 3:
        return []
    idx, props = find_peaks(y, prominence=prominence, width=0, rel_height=0.5)
    spacing = np.gradient(x)
    peaks = []
    for n, i in enumerate(idx):
        pos, height = _refine_maximum(x, y, i)
        peaks.append(Peak(float(pos), float(height), float(props["widths"][n] * spacing[i])))
    if split_window is None:
        params = result.plan.params
        split_window = 4 * params.u / params.V0 if result.plan.axis != "u" else 0.0
    n = 0
    while n < len(peaks) - 1:
        sep = peaks[n + 1].position - peaks[n].position
        if sep < split_window:
            peaks[n].split_separation = peaks[n + 1].split_separation = sep
            peaks[n].partner, peaks[n + 1].partner = n + 1, n
            n += 2
        else:
            n += 1
    return peaks


def zero_spacing(x, y, variable=None, max_value: float = 0.1, prominence: float = 0.2):
    """Near-zeros of a non-negative oscillating curve and their mean spacing.

    A near-zero is a local minimum below ``max_value`` standing at least
    ``prominence`` beneath its surroundings.  The spacing is the slope of a
    least-squares line through ``variable(zeros)`` against the zero index, so
    it is the period in ``variable`` (identity by default).  Returns
    ``(zeros, spacing)``; ``spacing`` is NaN with fewer than two zeros.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    mask = np.isfinite(y)
    x, y = x[mask], y[mask]
    idx, _ = find_peaks(-y, prominence=prominence)
    idx = idx[y[idx] < max_value]
    zeros = np.array([_refine_maximum(x, -y, i)[0] for i in idx])
    if zeros.size < 2:
        return zeros, float("nan")
    t = zeros if variable is None else np.asarray(variable(zeros), float)
    return zeros, float(abs(np.polyfit(np.arange(t.size), t, 1)[0]))


def larmor_zero_spacing(result: SweepResult, min_offset: Optional[float] = None):
    """Spin-flip zeros of an energy sweep and their spacing in ``k_plus - k_minus``.

    Uses the spin-flip fraction of the transmitted flux, whose zeros are those
    of the spin-flip probability.  Only energies with ``(E - eps_1)/V0 >=
    min_offset`` (default ``2 u / V0``) are used, where both spin branches
    propagate freely.  Returns ``(zeros, spacing)``.
    """
    plan = result.plan
    if plan.axis != "E":
        raise ValueError("zero spacing needs an energy sweep")
    params = plan.params
    if min_offset is None:
        min_offset = 2 * params.u / params.V0
    x = result.abscissa
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = result.transmission(1, flip=True) / result.total("t")
    keep = x >= min_offset
    e1 = float(channel_energies(params, 1))
    return zero_spacing(x[keep], frac[keep],
                        variable=lambda z: precession_wavenumber(e1 + params.V0 * z, params))


def spacing_ratio(result_a: SweepResult, result_b: SweepResult) -> float:
    """Ratio of Larmor zero spacings, ``a`` over ``b``."""
    _, sa = larmor_zero_spacing(result_a)
    _, sb = larmor_zero_spacing(result_b)
    if not (np.isfinite(sa) and np.isfinite(sb)):
        raise ValueError("not enough spin-flip zeros to measure a spacing")
    return sa / sb
