import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cctunnel.matelem import CouplingMatrix
from cctunnel.model import DOWN, UP, Domain, ModelParams, channel_energies, open_channels
from cctunnel.odeint import IntegratorConfig, TooManyEvaluations
from cctunnel.vra import (AmplitudeMatrices, AmplitudeRHS, amplitude_rhs, probabilities,
                          solve_amplitudes, unitarity_defect)

FIG3 = dict(a=1, b=1, d=5, l=5)


def reference_rhs(x, R, T, k, v):
    Ep = np.diag(np.exp(1j * k * x))
    Em = np.diag(np.exp(-1j * k * x))
    D = np.diag(1 / (2j * k))
    psi = Ep + Em @ R
    return -(Ep + R @ Em) @ D @ v @ psi, -T @ Em @ D @ v @ psi


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.floats(-4, 4), st.integers(0, 2**31 - 1))
def test_compiled_rhs_matches_matrix_formula(n, x, seed):
    rng = np.random.default_rng(seed)
    p = ModelParams(a=1, b=1.5, d=7, l=5, u=0.1)
    ch = open_channels(p, channel_energies(p, n) + 0.3)
    R = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
    T = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
    dR, dT = amplitude_rhs(x, AmplitudeMatrices(R, T, x), ch, p)
    v = CouplingMatrix.for_channels(ch, p).reference(x)
    eR, eT = reference_rhs(x, R, T, ch.k_composite, v)
    assert_allclose(dR, eR, rtol=1e-12, atol=1e-12)
    assert_allclose(dT, eT, rtol=1e-12, atol=1e-12)


def test_pack_unpack_round_trip():
    rng = np.random.default_rng(3)
    R = rng.normal(size=(4, 4)) + 1j
    T = rng.normal(size=(4, 4)) - 1j
    back = AmplitudeMatrices.unpack(AmplitudeMatrices(R, T, 0.5).pack(), 0.5)
    assert_allclose(back.R, R)
    assert_allclose(back.T, T)


def test_no_coupling_gives_free_propagation():
    # a domain far from the barrier and the field sees v = 0
    p = ModelParams(a=1, b=1, d=5, l=5, u=0.05)
    E = channel_energies(p, 1) + 0.4
    rec = solve_amplitudes(E, p, domain=Domain(40.0, 45.0))
    assert_allclose(rec.R, 0, atol=0)
    assert_allclose(rec.T, np.eye(2), atol=0)


def test_zero_field_never_flips_spin():
    p = ModelParams(u=0.0, **FIG3)
    rec = solve_amplitudes(channel_energies(p, 1) + 0.43, p)
    assert rec.transmission(1, DOWN, 1, UP) == 0.0
    assert rec.reflection(1, DOWN, 1, UP) == 0.0


def test_spin_symmetry():
    p = ModelParams(u=0.05, **FIG3)
    rec = solve_amplitudes(channel_energies(p, 1) + 0.3, p)
    assert_allclose(rec.transmission(1, UP, 1, UP), rec.transmission(1, DOWN, 1, DOWN), rtol=1e-12)
    assert_allclose(rec.transmission(1, DOWN, 1, UP), rec.transmission(1, UP, 1, DOWN), rtol=1e-12)


@pytest.mark.parametrize("params", [
    dict(a=1, b=1, d=5, l=5, u=0.05),
    dict(a=1, b=1, d=7, l=5, u=0.15),
    dict(a=1, b=15, d=5, l=3, u=0.05, convention="derived"),
])
@pytest.mark.parametrize("offset", [0.2, 0.7])
def test_unitarity_and_reciprocity(params, offset):
    p = ModelParams(**params)
    rec = solve_amplitudes(channel_energies(p, 1) + offset, p)
    assert rec.unitarity_defect < 1e-6
    assert not rec.suspect
    # time reversal: flux-normalised reflection matrix is symmetric
    s = np.sqrt(rec.channels.k_composite)
    r = s[:, None] * rec.R / s[None, :]
    assert_allclose(r, r.T, atol=1e-7)


def test_probability_weights():
    p = ModelParams(a=1, b=1, d=7, l=5, u=0.05)
    ch = open_channels(p, channel_energies(p, 2) + 0.2)
    R = np.full((4, 4), 0.5 + 0j)
    P_r, P_t = probabilities(AmplitudeMatrices(R, np.zeros((4, 4)), 0.0), ch)
    k = ch.k_composite
    assert_allclose(P_r[1, 0], k[1] / k[0] * 0.25)
    assert_allclose(P_t, 0)
    assert unitarity_defect(np.zeros((2, 2)), np.eye(2)) == 0.0


def test_spin_flip_enhanced_near_resonance():
    p = ModelParams(u=0.05, **FIG3)
    e1 = channel_energies(p, 1)
    on = solve_amplitudes(e1 + 0.43, p).transmission(1, DOWN, 1, UP)
    off = solve_amplitudes(e1 + 0.25, p).transmission(1, DOWN, 1, UP)
    assert on > 5 * off


def test_loose_tolerance_flags_suspect():
    p = ModelParams(u=0.05, **FIG3)
    with pytest.warns(RuntimeWarning, match="unitarity"):
        rec = solve_amplitudes(channel_energies(p, 1) + 0.43, p,
                               IntegratorConfig(rtol=1e-1, atol=1e-1, max_step=5.0),
                               suspect_threshold=1e-12)
    assert rec.suspect


def test_integrator_failure_propagates():
    p = ModelParams(u=0.05, **FIG3)
    with pytest.raises(TooManyEvaluations):
        solve_amplitudes(channel_energies(p, 1) + 0.4, p, IntegratorConfig(max_evals=50))


def test_rhs_object_reuses_coupling_buffer_safely():
    p = ModelParams(u=0.05, **FIG3)
    ch = open_channels(p, channel_energies(p, 1) + 0.4)
    rhs = AmplitudeRHS(ch, p)
    state = AmplitudeMatrices.initial(2, 0.0).pack()
    a = rhs(0.1, state).copy()
    rhs(0.7, state)
    assert_allclose(rhs(0.1, state), a, atol=0)


def test_default_tolerances_are_quiet():
    p = ModelParams(u=0.05, **FIG3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_amplitudes(channel_energies(p, 1) + 0.12, p)
