import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tclswarm.errors import DomainError
from tclswarm.oscillators import (TWO_PI, bias_from_duty, coupling_sums, duty_bias, heaviside,
                                  kuramoto_boolean_step, natural_frequency_correction,
                                  switch_from_phase, switching_signal)


def test_heaviside_convention():
    assert heaviside(0.0) == 1
    assert heaviside(-1e-300) == 0
    assert heaviside(np.array([-1.0, 0.0, 2.0])).tolist() == [0, 1, 1]


def test_duty_bias_endpoints():
    assert duty_bias(math.pi) == pytest.approx(0.0, abs=1e-15)
    assert duty_bias(0.0) == pytest.approx(1.0)
    assert duty_bias(TWO_PI) == pytest.approx(-1.0)
    for bad in (-0.1, TWO_PI + 0.1, float("nan")):
        with pytest.raises(DomainError):
            duty_bias(bad)


def test_on_window_is_centred_on_half_pi():
    s0 = bias_from_duty(0.25)
    assert switch_from_phase(math.pi / 2, s0) == 1
    assert switch_from_phase(math.pi / 4 - 1e-9, s0) == 0
    assert switch_from_phase(3 * math.pi / 2, s0) == 0


@settings(max_examples=50, deadline=None)
@given(t_on=st.floats(0.01, TWO_PI - 0.01))
def test_on_fraction_matches_duty(t_on):
    samples = 1000
    phases = (np.arange(samples) + 0.5) * TWO_PI / samples
    frac = switch_from_phase(phases, duty_bias(t_on)).mean()
    assert abs(frac - t_on / TWO_PI) <= 1 / 1000


def test_switching_signal_is_periodic():
    s0 = bias_from_duty(0.5)
    t = np.linspace(0, 3, 301)
    a = switching_signal(2.0, t, 0.3, s0)
    b = switching_signal(2.0, t + 0.5, 0.3, s0)
    assert np.array_equal(a, b)


def test_coupling_zero_when_synchronised():
    phases = np.full(6, 0.7)
    assert np.all(coupling_sums(phases, np.zeros(6)) == 0)
    alphas = np.arange(6) * TWO_PI / 6
    assert np.all(coupling_sums(0.7 + alphas, alphas) == 0)


def test_coupling_counts_mismatches():
    phases = np.array([0.5, -0.5])  # sin > 0 and sin < 0
    assert coupling_sums(phases, np.zeros(2)).tolist() == [1.0, 1.0]


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12), dt=st.floats(1e-4, 0.1), seed=st.integers(0, 1000))
def test_zero_coupling_is_free_rotation(n, dt, seed):
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, TWO_PI, n)
    omegas = rng.uniform(0.1, 1.0, n)
    out = kuramoto_boolean_step(phases, omegas, 0.0, rng.uniform(0, 1, n), dt)
    assert np.array_equal(out, phases + dt * (TWO_PI * omegas))


def test_frequency_correction_identity_without_coupling():
    phases = np.full(4, 1.0)
    assert natural_frequency_correction(0.298, 0.267, phases, np.zeros(4), 2) == 0.298
    assert natural_frequency_correction(0.298, 0.0, np.array([0.5, -0.5]), np.zeros(2), 0,
                                        correction=0.01) == pytest.approx(0.308)
    shifted = natural_frequency_correction(0.298, 0.267, np.array([0.5, -0.5]), np.zeros(2), 0)
    assert shifted == pytest.approx(0.298 - 0.267 / TWO_PI)
