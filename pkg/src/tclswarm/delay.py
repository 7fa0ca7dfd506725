"""Delay calculator and load-following controller.

The delay calculator maps a uniform phase spacing ``alpha`` in
``[0, 2 pi / n]`` to the percent RMS reduction of aggregate power it achieves
relative to the synchronised (``alpha = 0``) population.  The controller
inverts that map to turn a utility reduction target into a phase spacing.
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ensemble import Regime, sample_population, simulate
from .errors import ConfigError
from .metrics import p_norm, rms
from .oscillators import TWO_PI

log = logging.getLogger(__name__)


def steady_state_rms(powers, duties, alphas):
    """Exact steady-state RMS of aggregate power for phase spacings ``alphas``.

    Once frequencies agree, TCL ``i`` is ON while the common phase lies on an
    arc of length ``2 pi d_i`` shifted by ``-i * alpha``; the aggregate is
    piecewise constant in phase, so its mean square is a finite sum over the
    sorted arc endpoints.
    """
    powers = np.asarray(powers, dtype=float)
    duties = np.asarray(duties, dtype=float)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    n, m = len(powers), len(alphas)
    t_on = TWO_PI * duties
    start = np.mod((math.pi - t_on) / 2 - np.arange(n)[None, :] * alphas[:, None], TWO_PI)
    end = start + t_on[None, :]
    wraps = end >= TWO_PI
    end = np.where(wraps, end - TWO_PI, end)
    level0 = wraps @ powers  # arcs covering phase 0
    edges = np.concatenate([start, end], axis=1)
    jumps = np.concatenate([np.broadcast_to(powers, (m, n)), np.broadcast_to(-powers, (m, n))],
                           axis=1)
    order = np.argsort(edges, axis=1, kind="stable")
    edges = np.take_along_axis(edges, order, axis=1)
    levels = level0[:, None] + np.cumsum(np.take_along_axis(jumps, order, axis=1), axis=1)
    widths = np.diff(np.concatenate([edges, np.full((m, 1), TWO_PI)], axis=1), axis=1)
    mean_sq = ((widths * levels ** 2).sum(axis=1) + edges[:, 0] * level0 ** 2) / TWO_PI
    return np.sqrt(mean_sq)


@dataclass(frozen=True, eq=False)
class DelayTable:
    """Sampled map from phase spacing (rad) to percent RMS reduction."""

    n: int
    alpha: np.ndarray
    p_norm: np.ndarray
    rated_power: float = None  # kW, mean rated power of the population
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        pn = np.asarray(self.p_norm, dtype=float)
        if alpha.shape != pn.shape or alpha.ndim != 1 or alpha.size == 0:
            raise ConfigError("delay table needs matching, non-empty alpha and p_norm columns")
        if np.any(np.diff(alpha) < 0):
            raise ConfigError("delay table rows must be sorted by alpha")
        hi = TWO_PI / self.n
        if alpha[0] < 0 or alpha[-1] > hi * (1 + 1e-12):
            raise ConfigError(f"alpha must lie in [0, 2*pi/n] = [0, {hi:.6g}]")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "p_norm", pn)

    def __len__(self):
        return len(self.alpha)

    @property
    def achievable(self):
        return float(self.p_norm.min()), float(self.p_norm.max())


def alpha_grid(n, grid_size):
    if grid_size < 2:
        raise ConfigError(f"grid_size must be >= 2, got {grid_size}")
    return np.linspace(0.0, TWO_PI / n, int(grid_size))


def _settled_rms(cfg, pop, alpha, dt):
    """Simulate to steady state at spacing ``alpha`` and return the measured RMS.

    Frequencies converge during a one-period lead-in, then three mean periods
    are discarded and two are measured.
    """
    period = 1.0 / pop.frequencies.mean()
    lead = max(period, 200 * dt)
    scale = alpha / (TWO_PI / len(pop))
    schedule = (Regime(0.0, "consensus"), Regime(lead, "desynchronized", scale))
    run = simulate(replace(cfg, schedule=schedule), lead + 5 * period, dt, population=pop)
    return rms(run.window(lead + 3 * period))


def build_delay_table(cfg, grid_size=100, method="simulate", dt=None, threads=1):
    """Tabulate percent RMS reduction against phase spacing for one population.

    ``method="simulate"`` integrates the full system for every grid point;
    ``method="analytic"`` evaluates the exact steady state directly.
    """
    pop = sample_population(cfg)
    n = len(pop)
    alphas = alpha_grid(n, grid_size)
    if method == "analytic":
        levels = steady_state_rms(pop.powers * pop.etas, pop.duties, alphas)
    elif method == "simulate":
        if dt is None:
            dt = 1.0 / (pop.frequencies.mean() * 4 * max(n, 100))
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(threads) as pool:
                levels = np.array(list(pool.map(lambda a: _settled_rms(cfg, pop, a, dt), alphas)))
        else:
            levels = np.array([_settled_rms(cfg, pop, a, dt) for a in alphas])
    else:
        raise ConfigError(f"unknown delay-table method {method!r}")
    p = np.array([p_norm(levels[0], lv) for lv in levels])
    p[0] = 0.0
    return DelayTable(n=n, rated_power=float(pop.powers.mean()), alpha=alphas, p_norm=p,
                      provenance={"config": cfg.digest(), "seed": cfg.seed, "method": method,
                                  "dt": dt})


def lookup_alpha(table, target_p_norm):
    """Spacing whose tabulated reduction is nearest ``target_p_norm``.

    Returns ``(alpha, clamped)``; ties resolve to the smaller spacing and a
    target outside the achievable range is clamped to it.
    """
    lo, hi = table.achievable
    clamped = not lo <= target_p_norm <= hi
    target = min(max(target_p_norm, lo), hi)
    i = int(np.argmin(np.abs(table.p_norm - target)))
    return float(table.alpha[i]), clamped


@dataclass(frozen=True)
class ReferenceSchedule:
    """Piecewise-constant utility reduction targets ``(start s, p_norm %)``."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((float(t), float(p)) for t, p in self.segments)
        if not segs:
            raise ConfigError("reference schedule is empty")
        starts = [t for t, _ in segs]
        if starts[0] < 0 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError(f"segment start times must be >= 0 and strictly increasing, "
                              f"got {starts}")
        object.__setattr__(self, "segments", segs)


def load_follow(cfg, table, schedule, duration, dt):
    """Track a reference schedule by re-spacing phases at every segment start.

    A consensus lead-in runs until the first segment when it starts after 0.
    Phases are re-spaced relative to TCL 0 without re-randomising.
    """
    if table.n != cfg.n:
        raise ConfigError(f"delay table is for n={table.n}, population has n={cfg.n}")
    spacing = TWO_PI / cfg.n
    regimes = []
    if schedule.segments[0][0] > 0:
        regimes.append(Regime(0.0, "consensus"))
    for start, target in schedule.segments:
        alpha, clamped = lookup_alpha(table, target)
        if clamped:
            lo, hi = table.achievable
            log.warning("target %.4g%% at t=%.6g s outside achievable [%.4g, %.4g]%%; clamped",
                        target, start, lo, hi)
        regimes.append(Regime(start, "desynchronized", alpha / spacing))
    return simulate(replace(cfg, schedule=tuple(regimes)), duration, dt)


class DelayCalculator(BaseEstimator):
    """Estimator wrapper: ``fit`` tabulates a population, ``predict`` maps targets to spacing.

    Parameters
    ----------
    grid_size : int
        Number of spacings between 0 and ``2 pi / n``.
    method : {"analytic", "simulate"}
    dt : float, optional
        Simulation step for ``method="simulate"``.
    """

    def __init__(self, grid_size=100, method="analytic", dt=None):
        self.grid_size = grid_size
        self.method = method
        self.dt = dt

    def fit(self, population_config, y=None):
        self.table_ = build_delay_table(population_config, self.grid_size, self.method, self.dt)
        self.n_ = population_config.n
        return self

    def predict(self, targets):
        check_is_fitted(self, "table_")
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        return np.array([lookup_alpha(self.table_, t)[0] for t in targets])
