"""Scalar figures of merit for aggregate-power series."""

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, check_positive
from .errors import BaselineError, ResolutionError, ShapeError


@dataclass(frozen=True)
class Series:
    """Uniformly sampled signal."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        values = as_vector(self.values, "values")
        if values.size == 0:
            raise ShapeError("series must be non-empty")
        check_positive("dt", self.dt)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def duration(self):
        return (len(self.values) - 1) * self.dt


def _values(s):
    v = s.values if isinstance(s, Series) else as_vector(s, "series")
    if v.size == 0:
        raise ShapeError("series must be non-empty")
    return v


def rms(s):
    v = _values(s)
    return float(np.sqrt(np.mean(v * v)))


def ripple(s):
    """RMS deviation from the series mean."""
    v = _values(s)
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def band_percent(s):
    """Half-width of the fluctuation band, as percent of the mean."""
    v = _values(s)
    mean = v.mean()
    if mean == 0:
        raise BaselineError("fluctuation band is undefined for a zero-mean series")
    return float(100.0 * np.abs(v - mean).max() / abs(mean))


def _percent_change(baseline, value, what):
    if baseline == 0:
        raise BaselineError(f"{what} baseline is zero")
    return 100.0 * (baseline - value) / baseline


def p_norm(p_rms_agg, p_rms_alpha):
    """Percent RMS reduction at offset alpha relative to the zero-offset RMS."""
    return _percent_change(p_rms_agg, p_rms_alpha, "P_rms,agg")


def p_red(p_random, p_desync):
    """Percent reduction of the random-phase fluctuation level."""
    return _percent_change(p_random, p_desync, "P_random")


def rmse_percent(p_ref, p_agg, p_base, dt=1.0):
    """Time-normalised RMS error against a reference, in percent of ``p_base``.

    The integral uses the trapezoid rule on the sample grid; ``p_ref`` may be
    a scalar reference.
    """
    if isinstance(p_agg, Series):
        dt = p_agg.dt
    agg = _values(p_agg)
    raw = p_ref.values if isinstance(p_ref, Series) else p_ref
    ref = np.full(agg.shape, float(raw)) if np.ndim(raw) == 0 else as_vector(raw, "p_ref")
    if ref.shape != agg.shape:
        raise ShapeError(f"misaligned series: {ref.shape} vs {agg.shape}")
    if agg.size < 2:
        raise ShapeError("need at least two samples to integrate")
    if isinstance(p_ref, Series) and isinstance(p_agg, Series) and p_ref.dt != p_agg.dt:
        raise ShapeError(f"misaligned grids: dt {p_ref.dt} vs {p_agg.dt}")
    check_positive("p_base", p_base)
    err2 = (ref - agg) ** 2
    span = (agg.size - 1) * dt
    mean_sq = np.trapezoid(err2, dx=dt) / span
    return float(100.0 * np.sqrt(mean_sq) / p_base)


def relative_error_percent(p_ref, p_agg):
    """Worst-case deviation from a scalar reference, in percent of it."""
    agg = _values(p_agg)
    if p_ref == 0:
        raise BaselineError("reference is zero")
    return float(100.0 * np.abs(agg - p_ref).max() / abs(p_ref))


def dominant_frequency(s, dt=None):
    """Frequency (Hz) of the largest non-DC DFT bin.

    The mean is removed before zero-padding to the next power of two, with a
    rectangular window and the peak reported at its bin centre.
    """
    if isinstance(s, Series):
        dt = s.dt
    if dt is None:
        raise ShapeError("dt is required for a bare array")
    v = _values(s)
    x = v - v.mean()
    scale = np.abs(v).max()
    if v.size < 4 or np.abs(x).max() <= 1e-12 * max(scale, 1.0):
        raise ResolutionError("series has no non-DC content")
    nfft = 1 << (v.size - 1).bit_length()
    mag = np.abs(np.fft.rfft(x, n=nfft))
    mag[0] = 0.0
    k = int(np.argmax(mag))
    freq = k / (nfft * dt)
    window = v.size * dt
    if freq * window < 2.0:
        raise ResolutionError(
            f"peak at {freq:.6g} Hz spans fewer than two periods of the {window:.6g} s window")
    return float(freq)
