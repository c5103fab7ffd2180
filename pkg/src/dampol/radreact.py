"""Transverse vacuum field and the radiation-reaction field of a polarization history.

Per mode the field equation A'' + w_k^2 A = (alpha / eps0) Y' gives

    E(t) = E_vac(t) - (alpha / eps0) int_0^t cos(w_k (t - t')) Y'(t') dt',

where E_vac is the freely evolving initial field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, HistoryGapError
from .medium import MediumParams
from .modes import MODE_VOLUME_FACTOR, CoefficientVector, ModeIndex

__all__ = [
    "ReactionKernel",
    "point_source_kernel",
    "reaction_field_mode",
    "reaction_field_point",
    "vacuum_field_mode",
]


def _history_upto(times, values, t, gap_factor=10.0):
    """Samples of a history on [0, t], closed with a linear interpolant at t."""
    tt = np.asarray(times, dtype=float)
    vv = np.asarray(values)
    if tt.ndim != 1 or tt.shape != vv.shape[:1] or tt.size < 2:
        raise DomainError("history needs matching 1-D times and values")
    if np.any(np.diff(tt) <= 0):
        raise DomainError("history times must increase")
    if tt[0] > 1e-12 * max(1.0, abs(t)) or tt[-1] < t * (1 - 1e-12):
        raise HistoryGapError(f"history covers [{tt[0]:g}, {tt[-1]:g}], need [0, {t:g}]")
    n = int(np.searchsorted(tt, t, side="right"))
    ts, vs = tt[:n], vv[:n]
    if ts[-1] < t:
        j = n
        frac = (t - tt[j - 1]) / (tt[j] - tt[j - 1])
        ts = np.append(ts, t)
        vs = np.append(vs, vv[j - 1] + frac * (vv[j] - vv[j - 1]))
    d = np.diff(ts)
    if d.size > 2:
        typical = np.median(d[d > 0])
        if np.max(d) > gap_factor * typical and np.max(d[:-1], initial=0.0) > gap_factor * typical:
            raise HistoryGapError(f"history has a gap of {np.max(d):g} (typical spacing {typical:g})")
    return ts, vs


def reaction_field_mode(mode: ModeIndex, ydot_history, medium: MediumParams, t: float):
    """-(alpha / eps0) int_0^t cos(w_k (t - t')) Y'(t') dt' by the trapezoidal rule.

    ``ydot_history`` is a pair (times, values); values may be complex
    (coefficient histories).  Samples after t are ignored.
    """
    if t < 0:
        raise DomainError("reaction field needs t >= 0")
    times, values = ydot_history
    if t == 0:
        return 0.0
    ts, vs = _history_upto(times, values, t)
    wk = mode.omega(medium)
    integrand = np.cos(wk * (t - ts)) * vs
    return -(medium.alpha / medium.eps0) * trapezoid(integrand, ts)


def vacuum_field_mode(mode: ModeIndex, medium: MediumParams, t: float) -> CoefficientVector:
    """Coefficient vector of the freely evolving transverse field.

    c_a = i V sqrt(hbar w_k / 2 eps0) e^{-i w_k t}; no matter or bath part.
    """
    wk = mode.omega(medium)
    amp = 1j * MODE_VOLUME_FACTOR * math.sqrt(medium.hbar * wk / (2 * medium.eps0))
    return CoefficientVector("E", amp * np.exp(-1j * wk * t), 0.0, t=t)


@dataclass(frozen=True)
class ReactionKernel:
    """Transverse cosine kernel of a point source, regularised at |k| < k_max.

    K(tau) = (1 / (2 pi)^3) int_{|k| < k_max} (delta_ij - k_i k_j / k^2) cos(c k tau) d^3k,
    reported per Cartesian component (the angular average gives 2/3 delta_ij).
    """

    k_max: float
    c: float = 1.0

    def __post_init__(self):
        if not self.k_max > 0:
            raise DomainError("k_max must be positive")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        K = self.k_max
        a = self.c * np.abs(tau)
        small = a * K < 1e-3
        safe = np.where(small, 1.0, a)
        x = safe * K
        # int_0^K k^2 cos(a k) dk
        full = (x**2 * np.sin(x) + 2 * x * np.cos(x) - 2 * np.sin(x)) / safe**3
        series = K**3 * (1 / 3 - (a * K) ** 2 / 10)
        radial = np.where(small, series, full)
        return radial / (3 * math.pi**2)


def point_source_kernel(k_max: float, medium: MediumParams) -> ReactionKernel:
    return ReactionKernel(k_max, medium.c)


def reaction_field_point(kernel: ReactionKernel, ydot_history, medium: MediumParams, t: float):
    """-(alpha / eps0) int_0^t K(t - t') Y'(t') dt' for a point-supported source."""
    times, values = ydot_history
    if t == 0:
        return 0.0
    ts, vs = _history_upto(times, values, t)
    return -(medium.alpha / medium.eps0) * trapezoid(kernel(t - ts) * vs, ts)
