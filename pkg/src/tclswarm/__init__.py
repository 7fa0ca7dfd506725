"""Simulation and control of desynchronised thermostatically controlled loads."""

from .config import ExperimentConfig, load_config, parse_config, preset_config
from .delay import DelayCalculator, DelayTable, ReferenceSchedule, build_delay_table, \
    load_follow, lookup_alpha
from .ensemble import PopulationConfig, Regime, SimResult, sample_population, simulate
from .errors import ConfigError, TclError
from .learned import DelayRegressor, MinMaxNormalizer, MlpModel

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DelayCalculator", "DelayRegressor", "DelayTable", "ExperimentConfig",
    "MinMaxNormalizer", "MlpModel", "PopulationConfig", "ReferenceSchedule", "Regime",
    "SimResult", "TclError", "build_delay_table", "load_config", "load_follow",
    "lookup_alpha", "parse_config", "preset_config", "sample_population", "simulate",
]
