"""Laplace-domain susceptibility, real-frequency response and Kramers-Kronig check."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError, InsufficientSpanError, PoleHitError
from .medium import CouplingSpec, MediumParams, kernel_laplace

__all__ = [
    "LaplaceResponse",
    "RealFrequencyResponse",
    "susceptibility",
    "real_frequency_response",
    "kramers_kronig_residual",
    "format_float",
]

DEFAULT_ETA = 1e-8


def format_float(x: float) -> str:
    """Fixed 17-significant-digit scientific notation used in every CSV."""
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop the sign of negative zero
    return "%.16e" % x


@dataclass(frozen=True)
class LaplaceResponse:
    """Susceptibility and permittivity of a homogeneous medium on the s-plane.

    chi(s) = alpha^2 / (eps0 [rho s^2 + rho omega0^2 + s gamma~(s)]) and
    eps(s) = 1 + chi(s).
    """

    medium: MediumParams
    coupling: CouplingSpec

    @property
    def is_rational(self) -> bool:
        return self.coupling.is_rational

    def gamma(self, s, warn=True):
        return kernel_laplace(self.medium, self.coupling, s, warn=warn)

    def restoring(self):
        """rho s^2 + rho omega0^2 as a polynomial."""
        m = self.medium
        return Polynomial([m.rho * m.omega0**2, 0.0, m.rho])

    def oscillator_denominator(self):
        """L(s) = (rho s^2 + rho omega0^2) g_d(s) + s g_n(s) for gamma~ = g_n / g_d."""
        gn, gd = self.coupling.laplace_rational()
        return self.restoring() * gd + Polynomial([0.0, 1.0]) * gn

    def chi_rational(self):
        """(numerator, denominator) polynomials of chi(s), rational couplings only."""
        m = self.medium
        _, gd = self.coupling.laplace_rational()
        return m.alpha**2 * gd, m.eps0 * self.oscillator_denominator()

    def dispersion_polynomial(self, k):
        """Numerator P_D of D(s; k) = k^2 + mu0 eps0 s^2 eps(s) = P_D / (eps0 L)."""
        m = self.medium
        _, gd = self.coupling.laplace_rational()
        L = self.oscillator_denominator()
        s2 = Polynomial([0.0, 0.0, 1.0])
        return k**2 * m.eps0 * L + m.mu0 * m.eps0 * s2 * (m.eps0 * L + m.alpha**2 * gd)

    def chi(self, s):
        return susceptibility(self, s)

    def eps(self, s):
        return 1.0 + susceptibility(self, s)

    def dispersion(self, s, k):
        """D(s; k) = k^2 + mu0 eps0 s^2 eps(s)."""
        m = self.medium
        return k**2 + m.mu0 * m.eps0 * s * s * self.eps(s)


def susceptibility(resp: LaplaceResponse, s: complex) -> complex:
    """Evaluate chi(s) = alpha^2 / (eps0 [rho s^2 + rho omega0^2 + s gamma~(s)]).

    Rational couplings use the closed rational form, valid on the whole
    plane.  Raises ``PoleHitError`` when s sits on a pole.
    """
    s = complex(s)
    m = resp.medium
    if resp.is_rational:
        num, den = resp.chi_rational()
        d = complex(den(s))
        scale = max(1.0, abs(s)) ** den.degree() * np.max(np.abs(den.coef))
        if abs(d) <= 1e-15 * scale:
            raise PoleHitError(s)
        return complex(num(s)) / d
    denom = m.rho * s * s + m.rho * m.omega0**2 + s * resp.gamma(s, warn=False)
    if abs(denom) <= 1e-15 * max(1.0, m.rho * abs(s) ** 2):
        raise PoleHitError(s)
    return m.alpha**2 / (m.eps0 * denom)


@dataclass(frozen=True)
class RealFrequencyResponse:
    """chi(omega) = chi~(-i omega + 0+) sampled on an increasing grid."""

    grid: np.ndarray
    chi_re: np.ndarray
    chi_im: np.ndarray

    @property
    def chi(self):
        return self.chi_re + 1j * self.chi_im

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "chi_re", "chi_im"])
        for row in zip(self.grid, self.chi_re, self.chi_im):
            w.writerow([format_float(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str):
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["omega", "chi_re", "chi_im"]:
            raise DomainError(f"unexpected header {rows[0]}")
        data = np.array(rows[1:], dtype=float)
        return cls(data[:, 0], data[:, 1], data[:, 2])


def real_frequency_response(resp: LaplaceResponse, grid, eta: float = DEFAULT_ETA) -> RealFrequencyResponse:
    """Sample chi(-i omega + eta) on a positive increasing frequency grid."""
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be positive and strictly increasing")
    vals = np.array([susceptibility(resp, -1j * w + eta) for w in grid])
    return RealFrequencyResponse(grid, vals.real.copy(), vals.imag.copy())


def _hilbert_real(grid, chi_im, chunk=256):
    """(2/pi) PV int_0^inf w' Im chi(w') / (w'^2 - w^2) dw' on the grid nodes.

    Trapezoid weights everywhere except a symmetric cell around the
    singular node, where the linearised Im chi is integrated exactly.
    """
    w = grid
    n = w.size
    dw = np.diff(w)
    wt = np.zeros(n)
    wt[:-1] += 0.5 * dw
    wt[1:] += 0.5 * dw
    slope = np.gradient(chi_im, w)
    half = 0.5 * wt
    logr = np.log((2 * w + half) / (2 * w - half))
    patch = 0.5 * (2 * half * slope + chi_im * logr + slope * (2 * half - 2 * w * logr))
    out = np.empty(n)
    f = wt * w * chi_im
    for lo in range(0, n, chunk):
        rows = slice(lo, min(n, lo + chunk))
        diff = w[None, :] ** 2 - w[rows, None] ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            g = f[None, :] / diff
        idx = np.arange(rows.start, rows.stop)
        g[idx - lo, idx] = 0.0
        out[rows] = g.sum(axis=1)
    return 2 / np.pi * (out + patch)


def kramers_kronig_residual(resp: RealFrequencyResponse, omega0: float = 1.0, min_points: int = 512) -> float:
    """Relative L2 mismatch between Re chi and the Hilbert transform of Im chi.

    The comparison runs over the grid interior (end nodes dropped).  The
    grid must cover [1e-2, 1e2] omega0 with at least ``min_points`` nodes.
    Returns 0 when both Re chi and its reconstruction vanish.
    """
    w = np.asarray(resp.grid, dtype=float)
    if w.size < min_points or w[0] > 1e-2 * omega0 * (1 + 1e-12) or w[-1] < 1e2 * omega0 * (1 - 1e-12):
        raise InsufficientSpanError(
            f"grid [{w[0]:g}, {w[-1]:g}] with {w.size} points does not cover "
            f"[{1e-2 * omega0:g}, {1e2 * omega0:g}] with >= {min_points} points"
        )
    re = np.asarray(resp.chi_re, dtype=float)
    kk = _hilbert_real(w, np.asarray(resp.chi_im, dtype=float))
    ref = np.linalg.norm(re[1:-1])
    err = np.linalg.norm((re - kk)[1:-1])
    if ref == 0.0:
        return 0.0 if err == 0.0 else float("inf")
    return float(err / ref)
