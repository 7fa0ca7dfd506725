import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tclswarm.errors import BaselineError, ConfigError, ResolutionError, ShapeError
from tclswarm.metrics import (Series, band_percent, dominant_frequency, p_norm, p_red,
                              relative_error_percent, ripple, rms, rmse_percent)


def test_basic_levels():
    v = np.array([1.0, 3.0, 1.0, 3.0])
    assert rms(v) == pytest.approx(np.sqrt(5.0))
    assert ripple(v) == pytest.approx(1.0)
    assert band_percent(v) == pytest.approx(50.0)
    assert ripple(np.full(8, 7.0)) == 0.0


def test_percent_reductions():
    assert p_norm(100.0, 100.0) == 0.0
    assert p_norm(100.0, 72.0) == pytest.approx(28.0)
    assert p_red(10.0, 6.0) == pytest.approx(40.0)
    with pytest.raises(BaselineError):
        p_norm(0.0, 1.0)
    with pytest.raises(BaselineError):
        p_red(0.0, 1.0)


def test_rmse_percent_constant_offset():
    agg = np.full(11, 102.0)
    assert rmse_percent(100.0, agg, 100.0, dt=0.5) == pytest.approx(2.0)
    assert rmse_percent(agg, agg, 100.0) == 0.0


def test_rmse_percent_trapezoid_oracle():
    t = np.linspace(0, 1, 5)
    agg = 100.0 + t  # error equals t
    # integral of t^2 on [0, 1] by the trapezoid rule with h = 0.25
    trap = 0.25 * (0 + 2 * (0.0625 + 0.25 + 0.5625) + 1) / 2
    assert rmse_percent(100.0, agg, 50.0, dt=0.25) == pytest.approx(100 * np.sqrt(trap) / 50)


def test_rmse_percent_validation():
    with pytest.raises(ShapeError):
        rmse_percent(np.ones(3), np.ones(4), 1.0)
    with pytest.raises(ShapeError):
        rmse_percent(1.0, np.ones(1), 1.0)
    with pytest.raises(ShapeError):
        rmse_percent(Series(np.ones(4), 0.1), Series(np.ones(4), 0.2), 1.0)
    with pytest.raises(ConfigError):
        rmse_percent(1.0, np.ones(4), 0.0)


def test_relative_error_is_worst_case():
    assert relative_error_percent(100.0, [99.0, 103.0, 100.0]) == pytest.approx(3.0)
    with pytest.raises(BaselineError):
        relative_error_percent(0.0, [1.0])


def test_dominant_frequency_sine():
    dt = 0.01
    t = np.arange(4096) * dt
    f = dominant_frequency(Series(5.0 + np.sin(2 * np.pi * 3.0 * t), dt))
    assert f == pytest.approx(3.0, abs=1 / (4096 * dt))


def test_dominant_frequency_square_wave():
    dt = 0.001
    t = np.arange(10000) * dt
    square = (np.sin(2 * np.pi * 2.0 * t) >= 0).astype(float) * 14.0
    assert dominant_frequency(square, dt) == pytest.approx(2.0, abs=1 / (16384 * dt))


def test_dominant_frequency_resolution_errors():
    with pytest.raises(ResolutionError):
        dominant_frequency(np.full(64, 28.0), 0.1)
    t = np.arange(100) * 0.01
    with pytest.raises(ResolutionError):
        dominant_frequency(np.sin(2 * np.pi * 1.0 * t), 0.01)  # one period in the window
    with pytest.raises(ShapeError):
        dominant_frequency(np.ones(8))


def test_series_validation():
    with pytest.raises(ShapeError):
        Series(np.array([]), 0.1)
    with pytest.raises(ConfigError):
        Series(np.ones(3), 0.0)
    assert Series(np.ones(11), 0.1).duration == pytest.approx(1.0)


def test_rms_hand_example():
    assert rms([3.0, 4.0]) == pytest.approx(3.5355, abs=1e-4)
    assert rms(np.zeros(5)) == 0.0
    assert rms([-2.0]) == 2.0


def test_reductions_half_and_full():
    assert p_norm(80.0, 40.0) == 50.0
    assert p_norm(80.0, 0.0) == 100.0
    assert p_red(5.0, 5.0) == 0.0


@settings(max_examples=50, deadline=None)
@given(a=st.floats(1e-3, 1e6), b=st.floats(0, 1e6), c=st.floats(1e-3, 1e3))
def test_reductions_scale_invariant(a, b, c):
    assert p_norm(c * a, c * b) == pytest.approx(p_norm(a, b), rel=1e-9, abs=1e-9)
    assert p_red(c * a, c * b) == pytest.approx(p_red(a, b), rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(gain=st.floats(0.01, 100), offset=st.floats(-100, 100), seed=st.integers(0, 99))
def test_dominant_frequency_invariant_to_gain_and_offset(gain, offset, seed):
    t = np.arange(2000) * 0.01
    phase = np.random.default_rng(seed).uniform(0, 2 * np.pi)
    x = np.sin(2 * np.pi * 1.7 * t + phase)
    assert dominant_frequency(gain * x + offset, 0.01) == dominant_frequency(x, 0.01)


def test_dominant_frequency_reference_signals():
    dt = 0.01
    t = np.arange(6000) * dt
    square = (np.sin(2 * np.pi * 0.5 * t) >= 0).astype(float)
    assert dominant_frequency(square, dt) == pytest.approx(0.5, abs=1 / (8192 * dt))
    t = np.arange(60000) * dt
    sine = np.sin(2 * np.pi * 0.298 * t)
    assert dominant_frequency(sine, dt) == pytest.approx(0.298, abs=1 / (65536 * dt))
