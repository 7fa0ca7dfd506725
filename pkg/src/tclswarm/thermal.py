"""Hybrid thermal model of a single cooling TCL.

Temperature follows the linear ODE

    dT/dt = -(T - Ta + s * P * R) / (R * C)

with a hysteresis thermostat on the deadband ``[Ts - delta/2, Ts + delta/2]``.
Capacitance is in kWh/degC, so ``R * C`` is in hours and every time in this
module is in seconds.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from ._validation import check_positive
from .errors import ConfigError, DomainError, StepSizeError

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class TclParams:
    """Physical constants of one TCL.  Defaults reproduce the reference house."""

    thermal_resistance: float = 2.0  # degC/kW
    thermal_capacitance: float = 10.0  # kWh/degC
    power: float = 14.0  # kW
    ambient_temp: float = 32.0  # degC
    set_point: float = 20.0  # degC
    deadband: float = 1.0  # degC
    efficiency: float = 1.0

    def __post_init__(self):
        check_positive("thermal_resistance", self.thermal_resistance)
        check_positive("thermal_capacitance", self.thermal_capacitance)
        check_positive("power", self.power)
        check_positive("deadband", self.deadband)
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"efficiency must be in (0, 1], got {self.efficiency}")

    @property
    def t_min(self):
        return self.set_point - self.deadband / 2

    @property
    def t_max(self):
        return self.set_point + self.deadband / 2

    @property
    def rc_seconds(self):
        return self.thermal_resistance * self.thermal_capacitance * SECONDS_PER_HOUR

    @property
    def on_equilibrium(self):
        """Temperature the ON dynamics relax towards, ``Ta - P R``."""
        return self.ambient_temp - self.power * self.thermal_resistance

    @property
    def feasible(self):
        return self.ambient_temp > self.t_max and self.on_equilibrium < self.t_min


@dataclass(frozen=True)
class TclThermalState:
    temperature: float
    switch: int
    clock: float = 0.0


def derived_bounds(params):
    """Return ``(t_min, t_max)`` of the thermostat deadband."""
    return params.t_min, params.t_max


def thermostat(T, s_prev, params):
    """Hysteresis switch: OFF below ``t_min``, ON above ``t_max``, hold otherwise.

    Works elementwise on arrays; equality with a bound holds the previous state.
    """
    return hysteresis(T, s_prev, params.t_min, params.t_max)


def hysteresis(T, s_prev, t_min, t_max):
    out = np.where(T < t_min, 0, np.where(T > t_max, 1, s_prev))
    return int(out) if out.ndim == 0 else out.astype(np.int8)


def exact_step(T, s, ambient, on_drop, rc_seconds, dt):
    """Advance temperatures by ``dt`` holding ``s`` fixed (closed-form solution).

    ``on_drop`` is ``P * R``.  All arguments broadcast.
    """
    eq = ambient - s * on_drop
    return eq + (T - eq) * np.exp(-dt / rc_seconds)


def cycle_times(params):
    """Natural ON and OFF durations (s) of the thermostat limit cycle."""
    ta, pr = params.ambient_temp, params.power * params.thermal_resistance
    lo, hi = params.t_min, params.t_max
    if ta <= hi:
        raise DomainError(f"OFF phase never reaches t_max: ambient {ta} must exceed {hi}")
    if ta - pr >= lo:
        raise DomainError(
            f"ON phase never reaches t_min: Ta - P*R = {ta - pr} must be below {lo}")
    rc = params.rc_seconds
    return (rc * math.log((hi - ta + pr) / (lo - ta + pr)),
            rc * math.log((ta - lo) / (ta - hi)))


def duty_and_frequency(params, duty=None, frequency=None):
    """Duty cycle and switching frequency (Hz) of the natural limit cycle.

    Measured field values can be supplied as ``duty``/``frequency``; when both
    are given they are validated and returned in place of the model values.
    """
    if duty is not None and frequency is not None:
        if not 0 < duty <= 1:
            raise ConfigError(f"duty must be in (0, 1], got {duty}")
        check_positive("frequency", frequency)
        return float(duty), float(frequency)
    t_on, t_off = cycle_times(params)
    period = t_on + t_off
    d = t_on / period if duty is None else float(duty)
    f = 1.0 / period if frequency is None else float(frequency)
    return d, f


def max_rate(params):
    """Largest |dT/dt| (degC/s) anywhere in the deadband, for either switch state."""
    ta, pr, rc = params.ambient_temp, params.power * params.thermal_resistance, params.rc_seconds
    return max(abs(t - ta + s * pr) for t in (params.t_min, params.t_max) for s in (0, 1)) / rc


def step_temperature(state, params, dt):
    """Advance one TCL by ``dt`` seconds, then apply the thermostat.

    ``dt`` may not exceed a tenth of the shorter half-cycle.
    """
    check_positive("dt", dt, exc=StepSizeError)
    limit = 0.1 * min(cycle_times(params))
    if dt > limit:
        raise StepSizeError(f"dt={dt} s exceeds the accuracy limit {limit:.6g} s "
                            "(one tenth of the shorter half-cycle)")
    T = exact_step(state.temperature, state.switch, params.ambient_temp,
                   params.power * params.thermal_resistance, params.rc_seconds, dt)
    T = float(T)
    return replace(state, temperature=T, switch=thermostat(T, state.switch, params),
                   clock=state.clock + dt)


def balanced_ambient(set_point, duty, power, resistance):
    """Ambient temperature at which a TCL forced at ``duty`` averages ``set_point``.

    Under a fast periodic switch with duty ``d`` the mean temperature settles at
    ``Ta - d P R``; solving for ``Ta`` centres the orbit in the deadband.
    """
    return set_point + duty * power * resistance
