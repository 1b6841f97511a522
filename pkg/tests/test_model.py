import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cctunnel.model import (DOWN, UP, Convention, InvalidEnergyError, ModelParams,
                            channel_energies, integration_domain, open_channels)


def test_channel_energies_scale_with_j_squared_over_d_squared():
    p = ModelParams(a=1, b=1, d=5, l=5, u=0)
    assert_allclose(channel_energies(p, 1), math.pi**2 / 25)
    assert_allclose(channel_energies(p, np.arange(1, 4)), np.array([1, 4, 9]) * math.pi**2 / 25)


def test_channel_energies_units():
    p = ModelParams(a=1, b=1, d=2, l=2, u=0, m=3.0, hbar=0.5)
    assert_allclose(channel_energies(p, 2), 0.25 * 4 * math.pi**2 / (3.0 * 4))


def test_second_channel_opens_near_point_six_for_d7():
    p = ModelParams(a=1, b=1, d=7, l=5, u=0.05)
    assert_allclose(channel_energies(p, 2) - channel_energies(p, 1), 3 * math.pi**2 / 49)
    e1 = channel_energies(p, 1)
    assert open_channels(p, e1 + 0.60).n_open == 1
    assert open_channels(p, e1 + 0.61).n_open == 2


def test_wave_numbers():
    p = ModelParams(a=1, b=1, d=5, l=5, u=0)
    E = channel_energies(p, 1) + 0.5
    ch = open_channels(p, E)
    assert ch.n_open == 1
    assert_allclose(ch.k, [2 * math.sqrt(0.5)])
    assert_allclose(ch.k_composite, [2 * math.sqrt(0.5)] * 2)


def test_n_max_truncates_open_channels():
    p = ModelParams(a=1, b=1, d=5, l=5, u=0, n_max=3)
    ch = open_channels(p, channel_energies(p, 1) + 100)
    assert ch.n_open == 3


def test_energy_below_first_channel_rejected():
    p = ModelParams(a=1, b=1, d=5, l=5, u=0)
    with pytest.raises(InvalidEnergyError):
        open_channels(p, channel_energies(p, 1))
    with pytest.raises(ValueError):
        open_channels(p, 0.0)


@pytest.mark.parametrize("name,value", [("a", 0), ("d", -1), ("u", -0.1), ("b", -1),
                                        ("V0", 0), ("n_max", 0), ("n_max", 2.5)])
def test_invalid_parameters_rejected(name, value):
    kwargs = dict(a=1, b=1, d=5, l=5, u=0)
    kwargs[name] = value
    with pytest.raises(ValueError, match=name):
        ModelParams(**kwargs)


def test_convention_accepts_strings():
    p = ModelParams(a=1, b=1, d=5, l=5, u=0, convention="derived")
    assert p.convention is Convention.DERIVED
    assert p.as_dict()["convention"] == "derived"


@given(st.integers(1, 7), st.sampled_from([UP, DOWN]))
def test_composite_index_round_trip(j, spin):
    p = ModelParams(a=1, b=1, d=5, l=5, u=0)
    ch = open_channels(p, channel_energies(p, 7) + 1)
    c = ch.composite_index(j, spin)
    assert 0 <= c < ch.size
    assert ch.channel_spin(c) == (j, spin)


def test_composite_index_is_spin_major():
    p = ModelParams(a=1, b=1, d=5, l=5, u=0)
    ch = open_channels(p, channel_energies(p, 2) + 0.1)
    assert [ch.composite_index(j, s) for s in (UP, DOWN) for j in (1, 2)] == [0, 1, 2, 3]
    with pytest.raises(IndexError):
        ch.composite_index(3, UP)


def test_paper_code_domain_uses_larger_of_a_and_b():
    p = ModelParams(a=1, b=15, d=5, l=3, u=0.05)
    dom = integration_domain(p)
    assert_allclose(dom.x_right, (2 * 15 + 2 * 3 + 5) / 4)
    assert_allclose(dom.x_left, -dom.x_right)
    p = ModelParams(a=1, b=0.5, d=5, l=3, u=0.05)
    assert_allclose(integration_domain(p).x_right, (2 + 6 + 5) / 4)


def test_derived_domain_contains_field_region():
    p = ModelParams(a=1, b=15, d=5, l=3, u=0.05, convention="derived")
    assert_allclose(integration_domain(p).x_right, 15 + (6 + 5) / 4)
    p = ModelParams(a=1, b=0.1, d=5, l=3, u=0.05, convention="derived")
    assert_allclose(integration_domain(p).x_right, (2 + 6 + 5) / 4)
