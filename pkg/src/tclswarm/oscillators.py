"""Phase-oscillator switching signals and the Boolean Kuramoto baseline.

A TCL is modelled as an oscillator whose switch is ON while
``sin(phase) >= s0`` with ``s0 = sin((pi - T_ON) / 2)``; ``T_ON = 2 pi d`` is
the ON time expressed as phase, so the ON window is the arc
``[(pi - T_ON)/2, (pi + T_ON)/2]`` centred on ``pi/2``.

Convention: phases are radians and frequencies Hz, so free rotation is
``dphi/dt = 2 pi f``.  Boolean coupling gains contribute radians per second.
"""

import math

import numpy as np

from ._validation import as_vector, check_same_length
from .errors import DomainError

TWO_PI = 2.0 * math.pi


def heaviside(x):
    """Unit step with ``heaviside(0) == 1``."""
    out = np.where(np.asarray(x) < 0, 0, 1)
    return int(out) if out.ndim == 0 else out.astype(np.int8)


def duty_bias(t_on_phase):
    t = np.asarray(t_on_phase, dtype=float)
    if np.any((t < 0) | (t > TWO_PI)) or np.any(~np.isfinite(t)):
        raise DomainError(f"ON phase must lie in [0, 2*pi], got {t_on_phase!r}")
    out = np.sin((math.pi - t) / 2)
    return float(out) if out.ndim == 0 else out


def bias_from_duty(duty):
    return duty_bias(TWO_PI * np.asarray(duty, dtype=float))


def switch_from_phase(phase, s0):
    return heaviside(np.sin(phase) - s0)


def switching_signal(f, t, alpha, s0):
    """Switch state of an oscillator at frequency ``f`` (Hz), time ``t`` (s)."""
    return switch_from_phase(TWO_PI * np.asarray(f) * np.asarray(t) + alpha, s0)


def coupling_sums(phases, alphas):
    """Boolean mismatch count ``sum_{j != i} |H(sin phi_j) - H(sin(phi_i + a_j - a_i))|``.

    The pairwise offset is realised as ``a_ij = a_j - a_i``, so the coupling
    vanishes once phase differences equal offset differences.
    """
    phases = as_vector(phases, "phases")
    alphas = as_vector(alphas, "alphas")
    check_same_length(phases=phases, alphas=alphas)
    own = heaviside(np.sin(phases))  # H(sin phi_j), indexed by j
    shifted = heaviside(np.sin(phases[:, None] + alphas[None, :] - alphas[:, None]))
    mismatch = np.abs(own[None, :].astype(np.int16) - shifted)
    np.fill_diagonal(mismatch, 0)
    return mismatch.sum(axis=1).astype(float)


def kuramoto_boolean_step(phases, omegas, K, alphas, dt):
    """Explicit Euler step of the Boolean Kuramoto model (pre-step snapshot)."""
    phases = as_vector(phases, "phases")
    omegas = as_vector(omegas, "omegas")
    check_same_length(phases=phases, omegas=omegas, alphas=as_vector(alphas, "alphas"))
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    rate = TWO_PI * omegas
    if K != 0:
        rate = rate + K * coupling_sums(phases, alphas)
    return phases + dt * rate


def natural_frequency_correction(omega_fft, K, phases, alphas, i, correction=0.0):
    """Natural frequency (Hz) that yields ``omega_fft`` at this phase snapshot.

    ``correction`` is a manual additive trim; no procedure exists to solve for it.
    """
    coupling = coupling_sums(phases, alphas)[i]
    return omega_fft - K * coupling / TWO_PI + correction
