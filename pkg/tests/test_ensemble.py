from dataclasses import replace
import math

import numpy as np
import pytest

from tclswarm.ensemble import (PopulationConfig, Regime, aggregate_power, check_step,
                               default_schedule, sample_population, simulate,
                               uniform_phase_offsets)
from tclswarm.errors import ConfigError, ShapeError

HOMOGENEOUS4 = PopulationConfig(n=4, power_range=(14, 14), duty_range=(0.5, 0.5),
                                frequency_range=(0.5, 0.5))
CASE1 = PopulationConfig(n=1000, power_range=(1.66, 1.66), duty_range=(0.422, 0.482),
                         frequency_range=(0.0029, 0.0033), deadband=3, set_point=27,
                         thermal_resistance=9.8, thermal_capacitance=0.0746)


def test_aggregate_power_examples():
    assert aggregate_power(np.zeros(4), np.full(4, 14.0)) == 0.0
    assert aggregate_power(np.ones(4), np.full(4, 14.0)) == 56.0
    assert aggregate_power([1, 0, 1, 0], np.full(4, 14.0), np.full(4, 0.5)) == 14.0
    with pytest.raises(ShapeError):
        aggregate_power(np.ones(3), np.ones(4))


def test_uniform_offsets():
    assert uniform_phase_offsets(4)[1] == pytest.approx(math.pi / 2)
    assert uniform_phase_offsets(1000)[1] == pytest.approx(math.pi / 500)
    assert uniform_phase_offsets(1).tolist() == [0.0]
    with pytest.raises(ConfigError):
        uniform_phase_offsets(0)


def test_homogeneous_sampling_and_determinism():
    pop = sample_population(HOMOGENEOUS4)
    assert np.all(pop.powers == 14.0) and np.all(pop.duties == 0.5)
    again = sample_population(HOMOGENEOUS4)
    assert np.array_equal(pop.phases, again.phases)
    other = sample_population(replace(HOMOGENEOUS4, seed=1))
    assert not np.array_equal(pop.phases, other.phases)
    assert np.all((pop.phases >= 0) & (pop.phases < 2 * math.pi))


def test_sampling_respects_ranges():
    pop = sample_population(CASE1)
    assert pop.duties.min() >= 0.422 and pop.duties.max() <= 0.482
    assert pop.frequencies.min() >= 0.0029 and pop.frequencies.max() <= 0.0033
    t = pop.params
    assert np.all((pop.temperatures >= t.t_min) & (pop.temperatures <= t.t_max))


@pytest.mark.parametrize("kwargs", [dict(n=0), dict(duty_range=(0.6, 0.4)),
                                    dict(duty_range=(0.0, 0.5)), dict(protocol="gossip"),
                                    dict(power_range=(-1, 2)), dict(consensus_gain=1.0),
                                    dict(schedule=((10, "random"), (5, "consensus")))])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        PopulationConfig(**kwargs)


def test_infeasible_ambient_rejected():
    with pytest.raises(ConfigError, match="infeasible"):
        sample_population(replace(CASE1, ambient_temp=28.0))


def test_regime_validation():
    with pytest.raises(ConfigError):
        Regime(0.0, "chaos")
    with pytest.raises(ConfigError):
        Regime(-1.0, "random")


def test_step_guard():
    with pytest.raises(ConfigError):
        check_step(CASE1, 500.0)
    check_step(CASE1, 1.0)


def test_exact_cancellation_four_tcls():
    run = simulate(HOMOGENEOUS4, 60.0, 0.02)
    assert [r[1] for r in run.regimes] == ["random", "consensus", "desynchronized"]
    steady = run.window(42.0)
    assert np.all(steady == 28.0)


def test_homogeneous_k_over_n_duty():
    cfg = PopulationConfig(n=8, power_range=(2, 2), duty_range=(0.375, 0.375),
                           frequency_range=(1.0, 1.0))
    run = simulate(cfg, 12.0, 0.001)
    steady = run.window(9.0)
    # at most one sample per edge may catch the transition
    assert np.count_nonzero(steady != 6.0) <= 2 * 8 * 3


def test_single_tcl_square_wave():
    cfg = PopulationConfig(n=1, power_range=(3, 3), duty_range=(0.4, 0.4),
                           frequency_range=(0.5, 0.5))
    run = simulate(cfg, 20.0, 0.001)
    assert set(np.unique(run.p_agg)) == {0.0, 3.0}
    assert run.p_agg.mean() == pytest.approx(3.0 * 0.4, abs=0.01)


def test_power_bound_and_comfort_case1():
    run = simulate(CASE1, 9000.0, 1.0, record_switches=True)
    assert np.all((run.p_agg >= 0) & (run.p_agg <= run.max_power))
    assert run.comfort_ok
    assert run.switches.shape == (9000, 1000)
    tail = run.tail()
    assert tail.mean() == pytest.approx(run.expected_mean, rel=0.02)


def test_frequencies_converge_in_consensus():
    cfg = PopulationConfig(n=100)
    run = simulate(cfg, 30.0, 0.01, frequency_stride=100)
    pop = sample_population(cfg)
    assert np.abs(run.final_frequencies - pop.frequencies.mean()).max() <= 1e-6
    assert run.frequencies.shape[1] == 100


def test_determinism_bitwise():
    a = simulate(PopulationConfig(n=50), 9.0, 0.01)
    b = simulate(PopulationConfig(n=50), 9.0, 0.01)
    assert np.array_equal(a.p_agg, b.p_agg) and np.array_equal(a.f_mean, b.f_mean)


def test_protocol_none_stays_random():
    run = simulate(PopulationConfig(n=20, protocol="none"), 6.0, 0.01)
    assert [r[1] for r in run.regimes] == ["random"]


def test_kuramoto_protocol_runs():
    cfg = PopulationConfig(n=4, power_range=(14, 14), duty_range=(0.5, 0.5),
                           frequency_range=(0.29, 0.31), protocol="kuramoto")
    run = simulate(cfg, 12.0, 0.01)
    assert np.all(np.isfinite(run.p_agg))


def test_custom_schedule_and_alpha_scale():
    cfg = replace(HOMOGENEOUS4, schedule=(Regime(0, "consensus"),
                                          Regime(10, "desynchronized", 0.5)))
    run = simulate(cfg, 20.0, 0.02)
    assert run.regimes[-1][2] == pytest.approx(math.pi / 4)
    assert [r.start for r in default_schedule(9.0)] == [0.0, 3.0, 6.0]
