"""Heterogeneous TCL populations driven by phased switching oscillators.

Every TCL carries a thermal state, a switching frequency and a phase.  The
run is divided into regimes:

``random``
    each TCL rotates at its own frequency from its own random phase.
``consensus``
    phases are aligned and frequencies relax to their mean through
    distributed averaging (one averaging step per simulation step).
``desynchronized``
    phases are re-spaced ``i * alpha`` apart on top of the common frequency;
    averaging keeps running.

The oscillator decides the switch; the thermostat only overrides it while a
temperature is outside its deadband, which keeps every TCL within comfort
bounds up to a single step of overshoot.
"""

from dataclasses import asdict, dataclass, field
import hashlib
import json
import math

import numpy as np

from ._validation import as_vector, check_positive, check_range, check_same_length
from .consensus import build_weight_matrix, stability_bound
from .errors import ConfigError
from .oscillators import TWO_PI, bias_from_duty, coupling_sums
from .seeding import rng_for
from .thermal import TclParams, balanced_ambient, cycle_times, max_rate

PROTOCOLS = ("distributed-averaging", "kuramoto", "none")
REGIMES = ("random", "consensus", "desynchronized")


@dataclass(frozen=True)
class Regime:
    """Regime starting at ``start`` seconds.

    ``alpha_scale`` sets the desynchronised phase spacing as a multiple of
    ``2 pi / n``; other regimes ignore it.
    """

    start: float
    tag: str
    alpha_scale: float = 1.0

    def __post_init__(self):
        if self.tag not in REGIMES:
            raise ConfigError(f"unknown regime {self.tag!r}; expected one of {REGIMES}")
        if not math.isfinite(self.start) or self.start < 0:
            raise ConfigError(f"regime start must be finite and >= 0, got {self.start}")
        if not math.isfinite(self.alpha_scale) or self.alpha_scale < 0:
            raise ConfigError(f"alpha_scale must be >= 0, got {self.alpha_scale}")


@dataclass(frozen=True)
class PopulationConfig:
    n: int = 100
    seed: int = 0
    power_range: tuple = (14.0, 14.0)  # kW
    duty_range: tuple = (0.5, 0.5)
    frequency_range: tuple = (0.271 * 0.95, 0.271 * 1.05)  # Hz
    deadband: float = 1.0  # degC
    set_point: float = 20.0  # degC
    eta: float = 1.0
    thermal_resistance: float = 2.0  # degC/kW
    thermal_capacitance: float = 10.0  # kWh/degC
    ambient_temp: float = None  # degC; None centres the mean orbit on the set point
    protocol: str = "distributed-averaging"
    weight: float = 0.06
    consensus_gain: float = 0.1  # averaging step as a fraction of the stability bound
    schedule: tuple = ()  # Regime entries; empty means thirds of the run
    initial_temp: float = None  # pin every TCL instead of drawing uniformly
    kuramoto_coupling: float = 0.267
    kuramoto_correction: float = 0.0  # Hz, added to every natural frequency

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "power_range", check_range("power_range", self.power_range))
        object.__setattr__(self, "duty_range", check_range("duty_range", self.duty_range))
        object.__setattr__(self, "frequency_range",
                           check_range("frequency_range", self.frequency_range))
        if self.power_range[0] <= 0:
            raise ConfigError("power_range must be positive")
        if not (0 < self.duty_range[0] and self.duty_range[1] < 1):
            raise ConfigError(f"duty_range must lie inside (0, 1), got {self.duty_range}")
        if self.frequency_range[0] <= 0:
            raise ConfigError("frequency_range must be positive")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        check_positive("weight", self.weight, allow_zero=True)
        if not 0 < self.consensus_gain < 1:
            raise ConfigError(f"consensus_gain must be in (0, 1), got {self.consensus_gain}")
        schedule = tuple(r if isinstance(r, Regime) else Regime(*r) for r in self.schedule)
        starts = [r.start for r in schedule]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError(f"regime start times must be strictly increasing, got {starts}")
        object.__setattr__(self, "schedule", schedule)
        self.template()  # validates the thermal constants

    @property
    def resolved_ambient(self):
        if self.ambient_temp is not None:
            return float(self.ambient_temp)
        return balanced_ambient(self.set_point, sum(self.duty_range) / 2,
                                sum(self.power_range) / 2, self.thermal_resistance)

    def digest(self):
        """Short sha256 of the field values, used to tag derived artefacts."""
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def template(self, power=None):
        """Thermal parameters of a TCL with rated ``power`` (default: range midpoint)."""
        return TclParams(self.thermal_resistance, self.thermal_capacitance,
                         sum(self.power_range) / 2 if power is None else power,
                         self.resolved_ambient, self.set_point, self.deadband, self.eta)


@dataclass(frozen=True, eq=False)
class Population:
    powers: np.ndarray
    duties: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    temperatures: np.ndarray
    switches: np.ndarray
    etas: np.ndarray
    params: TclParams

    def __len__(self):
        return len(self.powers)

    @property
    def biases(self):
        return bias_from_duty(self.duties)

    @property
    def max_power(self):
        return float(self.powers @ self.etas)

    @property
    def expected_mean(self):
        return float((self.powers * self.etas) @ self.duties)


def sample_population(cfg):
    """Draw ``cfg.n`` TCLs from the configured ranges (deterministic per seed)."""
    rng = rng_for(cfg.seed, "population")
    n = cfg.n
    powers = rng.uniform(*cfg.power_range, n)
    duties = rng.uniform(*cfg.duty_range, n)
    freqs = rng.uniform(*cfg.frequency_range, n)
    phases = rng.uniform(0.0, TWO_PI, n)
    tmpl = cfg.template()
    if cfg.initial_temp is None:
        temps = rng.uniform(tmpl.t_min, tmpl.t_max, n)
    else:
        temps = np.full(n, float(cfg.initial_temp))
    switches = (rng.random(n) < duties).astype(np.int8)
    for p in cfg.power_range:
        if not cfg.template(p).feasible:
            raise ConfigError(
                f"thermal constants infeasible for P={p} kW: need Ta > {tmpl.t_max} and "
                f"Ta - P*R < {tmpl.t_min} (Ta={tmpl.ambient_temp})")
    return Population(powers, duties, freqs, phases, temps, switches,
                      np.full(n, float(cfg.eta)), tmpl)


def aggregate_power(switches, powers, etas=None):
    """Sum of rated power over the TCLs that are ON."""
    s = as_vector(switches, "switches")
    p = as_vector(powers, "powers")
    e = np.ones_like(p) if etas is None else as_vector(etas, "etas")
    check_same_length(switches=s, powers=p, etas=e)
    return float((p * e) @ s)


def uniform_phase_offsets(n, alpha=None):
    """Offsets ``i * alpha`` for ``i = 0..n-1``; ``alpha`` defaults to ``2 pi / n``."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    spacing = TWO_PI / n if alpha is None else float(alpha)
    return np.arange(n) * spacing


def default_schedule(duration):
    third = duration / 3
    return (Regime(0.0, "random"), Regime(third, "consensus"),
            Regime(2 * third, "desynchronized"))


@dataclass(frozen=True, eq=False)
class SimResult:
    time: np.ndarray
    p_agg: np.ndarray
    f_mean: np.ndarray
    dt: float
    regimes: tuple  # (start, tag, alpha spacing in rad)
    max_power: float
    expected_mean: float
    t_min: float
    t_max: float
    overshoot: float
    temp_min: np.ndarray  # per TCL, over the whole run
    temp_max: np.ndarray
    clamps: np.ndarray  # thermostat overrides per step
    switches: np.ndarray = None  # (steps, n) when recorded
    frequencies: np.ndarray = None  # (samples, n) when recorded
    frequency_steps: np.ndarray = None
    final_frequencies: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.time)

    @property
    def clamp_events(self):
        return int(self.clamps.sum())

    def index(self, t):
        return int(np.clip(np.searchsorted(self.time, t - 1e-9 * self.dt), 0, len(self.time)))

    def window(self, start, end=None):
        """Aggregate power sampled in ``[start, end)``."""
        stop = len(self.time) if end is None else self.index(end)
        return self.p_agg[self.index(start):stop]

    def tail(self, fraction=0.2):
        k = int(round(len(self.p_agg) * (1 - fraction)))
        return self.p_agg[k:]

    def regime_window(self, i, settle=0.0):
        """Aggregate power over regime ``i``, skipping ``settle`` seconds after it starts."""
        start = self.regimes[i][0] + settle
        end = self.regimes[i + 1][0] if i + 1 < len(self.regimes) else None
        return self.window(start, end)

    @property
    def comfort_ok(self):
        return bool(np.all(self.temp_min >= self.t_min - self.overshoot)
                    and np.all(self.temp_max <= self.t_max + self.overshoot))


def _boundaries(schedule, dt, steps):
    out = []
    for r in schedule:
        k = int(math.ceil(r.start / dt - 1e-9))
        if k < steps:
            out.append((k, r))
    if not out or out[0][0] != 0:
        out.insert(0, (0, Regime(0.0, "random")))
    return out


def check_step(cfg, dt):
    """Reject ``dt`` coarser than a tenth of the shortest natural half-cycle."""
    check_positive("dt", dt)
    limit = min(min(cycle_times(cfg.template(p))) for p in cfg.power_range) * 0.1
    if dt > limit:
        raise ConfigError(f"dt={dt} s exceeds the thermal accuracy limit {limit:.6g} s")


def simulate(cfg, duration, dt, population=None, record_switches=False,
             frequency_stride=0):
    """Integrate thermal dynamics, frequency averaging and phased switching.

    Parameters
    ----------
    cfg : PopulationConfig
    duration, dt : float
        Run length and step in seconds.
    population : Population, optional
        Pre-sampled population; drawn from ``cfg`` when omitted.
    record_switches : bool
        Keep the full (steps, n) switch matrix.
    frequency_stride : int
        Keep every ``frequency_stride``-th frequency vector (0 disables).
    """
    check_positive("duration", duration)
    check_step(cfg, dt)
    pop = sample_population(cfg) if population is None else population
    n = len(pop)
    steps = int(round(duration / dt))
    if steps < 1:
        raise ConfigError(f"duration {duration} s is shorter than one step of {dt} s")
    schedule = cfg.schedule or default_schedule(duration)
    if cfg.protocol == "none":
        schedule = (Regime(0.0, "random"),)
    bounds = _boundaries(schedule, dt, steps)

    W = build_weight_matrix(n, cfg.weight)
    h = cfg.consensus_gain * stability_bound(n, cfg.weight)
    averaging = cfg.protocol == "distributed-averaging" and math.isfinite(h)

    params = pop.params
    pe = pop.powers * pop.etas
    pr = pop.powers * params.thermal_resistance
    ta, tmin, tmax = params.ambient_temp, params.t_min, params.t_max
    decay = math.exp(-dt / params.rc_seconds)
    s0 = pop.biases
    omegas = pop.frequencies + cfg.kuramoto_correction

    theta = pop.phases.copy()
    f = pop.frequencies.copy()
    T = pop.temperatures.copy()
    temp_lo, temp_hi = T.copy(), T.copy()
    p_agg = np.empty(steps)
    f_mean = np.empty(steps)
    sw = np.empty((steps, n), dtype=np.int8) if record_switches else None
    f_rec, f_steps = [], []
    clamps = np.zeros(steps, dtype=np.int64)
    regimes = []
    alphas = np.zeros(n)
    tag = "random"
    nxt = 0

    for k in range(steps):
        while nxt < len(bounds) and bounds[nxt][0] == k:
            regime = bounds[nxt][1]
            nxt += 1
            tag = regime.tag
            alpha = regime.alpha_scale * TWO_PI / n if tag == "desynchronized" else 0.0
            alphas = uniform_phase_offsets(n, alpha)
            if cfg.protocol == "distributed-averaging" and tag != "random":
                theta = np.mod(theta[0] + alphas, TWO_PI)
            regimes.append((k * dt, tag, alpha))

        if tag != "random":
            if averaging:
                f = f + h * W.disagreement(f)
        if frequency_stride and k % frequency_stride == 0:
            f_rec.append(f.copy())
            f_steps.append(k)

        signal = np.sin(theta) >= s0
        s = np.where(T < tmin, False, np.where(T > tmax, True, signal))
        clamps[k] = np.count_nonzero(s != signal)
        p_agg[k] = pe @ s
        f_mean[k] = f.mean()
        if sw is not None:
            sw[k] = s

        eq = ta - s * pr
        T = eq + (T - eq) * decay
        np.minimum(temp_lo, T, out=temp_lo)
        np.maximum(temp_hi, T, out=temp_hi)

        if cfg.protocol == "kuramoto" and tag != "random":
            rate = TWO_PI * omegas + cfg.kuramoto_coupling * coupling_sums(theta, alphas)
            theta = np.mod(theta + dt * rate, TWO_PI)
        else:
            theta = np.mod(theta + (TWO_PI * dt) * f, TWO_PI)

    return SimResult(
        time=np.arange(steps) * dt, p_agg=p_agg, f_mean=f_mean, dt=dt,
        regimes=tuple(regimes), max_power=pop.max_power, expected_mean=pop.expected_mean,
        t_min=tmin, t_max=tmax,
        overshoot=dt * max(max_rate(cfg.template(p)) for p in cfg.power_range),
        temp_min=temp_lo, temp_max=temp_hi, clamps=clamps, switches=sw,
        frequencies=np.array(f_rec) if f_rec else None,
        frequency_steps=np.array(f_steps) if f_steps else None,
        final_frequencies=f)
