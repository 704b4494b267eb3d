import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ledkkl.channel import (DEFAULT_DELTA_PHI, ChannelParams, GaussianGainParams, NoiseConfig, gain,
                            gain_derivative, inverse_step, measure_pair, received_power, step)

angles = st.floats(-2.0, 2.0, allow_nan=False)
states = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


def scalar_gain(phi, a1=1.0, b1=0.2, c1=0.5, a2=0.5, b2=0.1, c2=0.4):
    return a1 * math.exp(-((phi - b1) / c1) ** 2) + a2 * math.exp(-((phi + b2) / c2) ** 2)


@given(angles)
def test_gain_matches_scalar_formula(phi):
    assert gain(phi, GaussianGainParams()) == pytest.approx(scalar_gain(phi), rel=1e-14, abs=1e-300)


@given(angles)
def test_gain_derivative_matches_central_difference(phi):
    h = 1e-6
    fd = (scalar_gain(phi + h) - scalar_gain(phi - h)) / (2 * h)
    assert gain_derivative(phi, GaussianGainParams()) == pytest.approx(fd, abs=1e-8)


def test_gain_positive_and_bounded():
    p = GaussianGainParams()
    phi = np.linspace(-3, 3, 2001)
    g = gain(phi, p)
    assert np.all(g > 0) and np.all(g <= p.peak_bound)


def test_gain_params_validation():
    with pytest.raises(ValueError):
        GaussianGainParams(c1=0.0)


def test_cp_bar_default_value():
    expected = math.exp(-0.5 * 0.085) / 0.085**2
    assert ChannelParams().cp_bar == pytest.approx(expected, rel=1e-14)


def test_cp_bar_at_ten_centimetres():
    assert ChannelParams(link_distance_d0=0.1).cp_bar == pytest.approx(95.1229, abs=1e-3)


def test_doubling_distance_power_ratio():
    ch = ChannelParams(link_distance_d0=0.1)
    ratio = received_power(0.2, ch.with_distance(0.2)) / received_power(0.2, ch)
    assert ratio == pytest.approx(math.exp(-0.05) / 4, rel=1e-12)


def test_unit_coefficient_power_is_gain():
    ch = ChannelParams(raw_cp=0.085**2 / math.exp(-0.5 * 0.085))
    assert ch.cp_bar == pytest.approx(1.0, rel=1e-14)
    assert received_power(0.3, ch) == pytest.approx(scalar_gain(0.3), rel=1e-13)


def test_delta_phi_is_six_degrees():
    assert DEFAULT_DELTA_PHI == pytest.approx(math.radians(6.0), rel=1e-15)


def test_received_power_decreases_with_distance():
    ch = ChannelParams()
    p = [received_power(0.1, ch.with_distance(d)) for d in (0.085, 0.1, 0.2, 0.5)]
    assert all(a > b for a, b in zip(p, p[1:]))


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelParams(link_distance_d0=0.0)
    with pytest.raises(ValueError):
        ChannelParams(te=-1.0)
    with pytest.raises(ValueError):
        NoiseConfig(measurement_std=-1.0)


@given(states)
def test_measure_pair_second_receiver_is_shifted(x):
    ch = ChannelParams()
    y = measure_pair(np.array(x), ch)
    assert y[0] == pytest.approx(ch.cp_bar * scalar_gain(x[0]), rel=1e-13)
    assert y[1] == pytest.approx(ch.cp_bar * scalar_gain(x[0] + DEFAULT_DELTA_PHI), rel=1e-13)


def test_measure_pair_ignores_velocity():
    ch = ChannelParams()
    assert np.array_equal(measure_pair([0.1, -3.0], ch), measure_pair([0.1, 5.0], ch))


def test_measurement_noise_statistics():
    ch = ChannelParams()
    noise = NoiseConfig(seed=1)
    x = np.zeros((20000, 2))
    dy = measure_pair(x, ch, noise) - measure_pair(x, ch)
    assert dy.std() == pytest.approx(math.sqrt(1e-3), rel=0.02)


@given(states, st.floats(-1, 1))
def test_step_matches_scalar_dynamics(x, u):
    ch = ChannelParams()
    nxt = step(np.array(x), u, ch)
    assert nxt[0] == x[0] + 0.01 * x[1]
    assert nxt[1] == x[1] + u


@given(states, st.floats(-1, 1))
def test_inverse_step_round_trip(x, u):
    ch = ChannelParams()
    back = inverse_step(step(np.array(x), u, ch), u, ch)
    assert np.allclose(back, x, atol=1e-15)


def test_step_batches_and_broadcasts_input():
    ch = ChannelParams()
    x = np.random.default_rng(0).uniform(-1, 1, (7, 2))
    u = np.linspace(0, 1, 7)
    out = step(x, u, ch)
    for i in range(7):
        assert np.array_equal(out[i], step(x[i], u[i], ch))


def test_process_noise_is_seeded():
    ch = ChannelParams()
    a = step(np.zeros((5, 2)), 0.0, ch, NoiseConfig(seed=9))
    b = step(np.zeros((5, 2)), 0.0, ch, NoiseConfig(seed=9))
    assert np.array_equal(a, b) and np.any(a != 0)
