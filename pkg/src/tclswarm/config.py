"""Experiment configuration files.

Files are ``key = value`` lines under ``[section]`` headers; ``#`` starts a
comment.  A ``preset = name`` key in ``[run]`` loads one of :data:`PRESETS`
first, and every other key overrides it.  Unknown sections or keys are
errors, and every error names the file and line.

Sections and keys (units in brackets)::

    [population]  n, seed, power_range [kW], duty_range, frequency_range [Hz],
                  deadband [degC], set_point [degC], eta, thermal_resistance
                  [degC/kW], thermal_capacitance [kWh/degC], ambient_temp
                  [degC or "balanced"], protocol, weight, consensus_gain,
                  initial_temp [degC or "random"], kuramoto_coupling,
                  kuramoto_correction [Hz], schedule
    [run]         preset, duration [s], dt [s], frequency_stride
    [sweep]       grid, method, dt [s or "auto"]
    [dataset]     n_min, n_max, grid, stride, power_range [kW], duty_range
    [train]       epochs, batch_size, learning_rate, final_learning_rate,
                  n_init, hidden_activation, train_fraction,
                  validation_fraction

Ranges are written ``lo, hi``.  A regime schedule is ``;``-separated entries
``start_s tag [alpha_scale]``, e.g. ``0 random; 20 consensus; 40 desynchronized``.
"""

import configparser
from dataclasses import dataclass, field, fields, replace
import re

from .ensemble import PopulationConfig, Regime
from .errors import ConfigError, TclError

CASE_THERMAL = {"power_range": "1.66, 1.66", "thermal_resistance": "9.8",
                "thermal_capacitance": "0.0746"}

PRESETS = {
    "exact-n4": {
        "population": {"n": "4", "power_range": "14, 14", "duty_range": "0.5, 0.5",
                       "frequency_range": "0.5, 0.5"},
        "run": {"duration": "60", "dt": "0.02"},
    },
    "fluctuation-n100": {
        "population": {"n": "100"},
        "run": {"duration": "60", "dt": "0.01"},
    },
    "case1": {
        "population": {"n": "1000", "duty_range": "0.422, 0.482",
                       "frequency_range": "0.0029, 0.0033", "deadband": "3",
                       "set_point": "27", **CASE_THERMAL},
        "run": {"duration": "9000", "dt": "1"},
    },
    "case2": {
        "population": {"n": "10000", "duty_range": "0.4812, 0.5354",
                       "frequency_range": "0.0026, 0.0036", "deadband": "2",
                       "set_point": "24", **CASE_THERMAL},
        "run": {"duration": "9000", "dt": "1"},
    },
    "load-follow": {
        "population": {"n": "100", "duty_range": "0.45, 0.55"},
        "run": {"duration": "120", "dt": "0.01"},
        "sweep": {"grid": "50", "method": "simulate"},
    },
}


@dataclass(frozen=True)
class RunSettings:
    duration: float = 60.0
    dt: float = 0.01
    frequency_stride: int = 0


@dataclass(frozen=True)
class SweepSettings:
    grid: int = 100
    method: str = "simulate"
    dt: float = None  # None picks a step from the mean period and n


@dataclass(frozen=True)
class DatasetSettings:
    n_min: int = 10
    n_max: int = 500
    grid: int = 100
    stride: int = 1
    power_range: tuple = (1.0, 2.0)
    duty_range: tuple = (0.4812, 0.5354)


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 40
    batch_size: int = 64
    learning_rate: float = 0.01
    final_learning_rate: float = 1e-4
    n_init: int = 3
    hidden_activation: str = "tanh"
    train_fraction: float = 0.7
    validation_fraction: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    population: PopulationConfig = field(default_factory=PopulationConfig)
    run: RunSettings = field(default_factory=RunSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    dataset: DatasetSettings = field(default_factory=DatasetSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    preset: str = None

    def with_seed(self, seed):
        return replace(self, population=replace(self.population, seed=int(seed)))

    def snapshot(self):
        """Plain nested dict of every resolved value, for run manifests."""
        out = {"preset": self.preset}
        for name in ("population", "run", "sweep", "dataset", "train"):
            obj = getattr(self, name)
            out[name] = {f.name: _jsonable(getattr(obj, f.name)) for f in fields(obj)}
        return out


def _jsonable(v):
    if isinstance(v, Regime):
        return [v.start, v.tag, v.alpha_scale]
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


SECTIONS = {"population": PopulationConfig, "run": RunSettings, "sweep": SweepSettings,
            "dataset": DatasetSettings, "train": TrainSettings}


def _parse_range(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'lo, hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_schedule(text):
    out = []
    for entry in filter(None, (e.strip() for e in text.split(";"))):
        parts = entry.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"regime entry {entry!r} should be 'start tag [alpha_scale]'")
        out.append(Regime(float(parts[0]), parts[1], float(parts[2]) if len(parts) == 3 else 1.0))
    return tuple(out)


def _optional_float(sentinel):
    def parse(text):
        return None if text.lower() == sentinel else float(text)
    return parse


PARSERS = {
    "population": {"n": int, "seed": int, "power_range": _parse_range,
                   "duty_range": _parse_range, "frequency_range": _parse_range,
                   "deadband": float, "set_point": float, "eta": float,
                   "thermal_resistance": float, "thermal_capacitance": float,
                   "ambient_temp": _optional_float("balanced"), "protocol": str,
                   "weight": float, "consensus_gain": float, "schedule": _parse_schedule,
                   "initial_temp": _optional_float("random"), "kuramoto_coupling": float,
                   "kuramoto_correction": float},
    "run": {"duration": float, "dt": float, "frequency_stride": int},
    "sweep": {"grid": int, "method": str, "dt": _optional_float("auto")},
    "dataset": {"n_min": int, "n_max": int, "grid": int, "stride": int,
                "power_range": _parse_range, "duty_range": _parse_range},
    "train": {"epochs": int, "batch_size": int, "learning_rate": float,
              "final_learning_rate": float, "n_init": int, "hidden_activation": str,
              "train_fraction": float, "validation_fraction": float},
}

_KEY_LINE = re.compile(r"^\s*([^=\s#\[][^=]*?)\s*=")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


def _key_lines(text):
    """Map (section, key) to the 1-based line defining it."""
    where, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        if m := _SECTION_LINE.match(line):
            section = m.group(1).strip()
            where.setdefault((section, None), no)
        elif m := _KEY_LINE.match(line):
            where[(section, m.group(1).strip())] = no
    return where


def parse_config(text, source="<config>"):
    """Parse configuration text into an :class:`ExperimentConfig`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#",), empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        msg = str(exc).splitlines()[0]
        raise ConfigError(f"{source}:{line}: {msg}" if line else f"{source}: {msg}") from exc
    lines = _key_lines(text)

    def fail(section, key, msg):
        no = lines.get((section, key)) or lines.get((section, None))
        raise ConfigError(f"{source}:{no}: {msg}" if no else f"{source}: {msg}")

    raw = {s: {} for s in SECTIONS}
    for section in cp.sections():
        if section not in SECTIONS:
            fail(section, None, f"unknown section [{section}]; expected one of {sorted(SECTIONS)}")

    preset = None
    if cp.has_option("run", "preset"):
        preset = cp.get("run", "preset")
        if preset not in PRESETS:
            fail("run", "preset", f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        for section, values in PRESETS[preset].items():
            raw[section].update({k: (v, None) for k, v in values.items()})
    for section in cp.sections():
        for key, value in cp.items(section):
            if section == "run" and key == "preset":
                continue
            if key not in PARSERS[section]:
                fail(section, key, f"unknown key {key!r} in [{section}]")
            raw[section][key] = (value, lines.get((section, key)))

    built = {}
    for section, cls in SECTIONS.items():
        kwargs = {}
        for key, (value, no) in raw[section].items():
            try:
                kwargs[key] = PARSERS[section][key](value.strip())
            except (ValueError, TclError) as exc:
                fail(section, key, f"bad value for {key} = {value!r}: {exc}")
        try:
            built[section] = cls(**kwargs)
        except TclError as exc:
            fail(section, None, f"[{section}] {exc}")
    cfg = ExperimentConfig(preset=preset, **built)
    _check(cfg, fail)
    return cfg


def _check(cfg, fail):
    r, s, d, t = cfg.run, cfg.sweep, cfg.dataset, cfg.train
    if r.duration <= 0 or r.dt <= 0:
        fail("run", None, "duration and dt must be positive")
    if r.frequency_stride < 0:
        fail("run", "frequency_stride", "frequency_stride must be >= 0")
    if s.grid < 2:
        fail("sweep", "grid", f"grid must be >= 2, got {s.grid}")
    if s.method not in ("simulate", "analytic"):
        fail("sweep", "method", f"method must be 'simulate' or 'analytic', got {s.method!r}")
    if not 2 <= d.n_min <= d.n_max or d.stride < 1 or d.grid < 2:
        fail("dataset", None, "need 2 <= n_min <= n_max, stride >= 1 and grid >= 2")
    if t.epochs < 1 or t.batch_size < 1 or t.n_init < 1:
        fail("train", None, "epochs, batch_size and n_init must be >= 1")
    if t.hidden_activation not in ("relu", "tanh"):
        fail("train", "hidden_activation", "hidden_activation must be 'relu' or 'tanh'")
    if not 0 < t.train_fraction < 1 or not 0 <= t.validation_fraction < 1:
        fail("train", None, "train_fraction must be in (0, 1), validation_fraction in [0, 1)")


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def preset_config(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return parse_config(f"[run]\npreset = {name}\n", f"<preset {name}>")
