"""Medium constants, reservoir coupling spectra and the memory kernel.

The reservoir enters every calculation through the spectral density

    J(w) = (8 pi / hbar c^3) w^3 |f(w)|^2

in terms of which the memory kernel is gamma(t) = int_0^inf J(w) cos(wt) dw and
its Laplace transform is gamma~(s) = s int_0^inf J(w) / (s^2 + w^2) dw.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial
from scipy import constants as sc
from scipy import integrate

from .errors import BranchPointWarning, DistributionalKernelError, DomainError

__all__ = [
    "UnitSystem",
    "MediumParams",
    "CouplingKind",
    "CouplingSpec",
    "KernelSample",
    "memory_kernel",
    "kernel_values",
    "kernel_laplace",
    "tail_mass",
    "to_scaled",
]

EPSABS = 1e-12
EPSREL = 1e-10
_QUAD_LIMIT = 500


class UnitSystem(str, enum.Enum):
    SI = "SI"
    SCALED = "scaled"


@dataclass(frozen=True)
class MediumParams:
    """Homogeneous medium constants.

    In the scaled system eps0 = mu0 = c = hbar = 1 and omega0 sets the
    frequency unit.
    """

    rho: float = 1.0
    omega0: float = 1.0
    alpha: float = 1.0
    eps0: float = 1.0
    mu0: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    unit_system: UnitSystem = UnitSystem.SCALED

    def __post_init__(self):
        object.__setattr__(self, "unit_system", UnitSystem(self.unit_system))
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if not self.omega0 > 0:
            raise DomainError(f"omega0 must be positive, got {self.omega0}")
        for name in ("eps0", "mu0", "c", "hbar"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not math.isclose(self.c**2 * self.eps0 * self.mu0, 1.0, rel_tol=1e-12):
            raise DomainError("constants violate c^2 = 1/(eps0 mu0)")

    @classmethod
    def si(cls, rho, omega0, alpha):
        return cls(
            rho=rho,
            omega0=omega0,
            alpha=alpha,
            eps0=sc.epsilon_0,
            mu0=1.0 / (sc.epsilon_0 * sc.c**2),
            c=sc.c,
            hbar=sc.hbar,
            unit_system=UnitSystem.SI,
        )

    @property
    def coupled(self) -> bool:
        return self.alpha != 0.0

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)


class CouplingKind(str, enum.Enum):
    OHMIC = "Ohmic"
    OHMIC_CUTOFF_EXP = "OhmicCutoffExp"
    LORENTZIAN = "Lorentzian"
    TABULATED = "Tabulated"


@dataclass(frozen=True)
class CouplingSpec:
    """Functional form of the reservoir coupling |f(w)|^2.

    ``Ohmic`` is |f|^2 = beta c^3 hbar / (4 pi^2 w^3), i.e. a flat spectral
    density J = 2 beta / pi, optionally truncated at ``cutoff`` (0 = none).
    ``OhmicCutoffExp`` multiplies the flat density by exp(-w / cutoff).
    ``Lorentzian`` uses J = (2 beta / pi) cutoff^2 / (cutoff^2 + w^2), whose
    kernel is beta * cutoff * exp(-cutoff t).
    ``Tabulated`` linearly interpolates (w, |f|^2) samples, zero outside.
    """

    kind: CouplingKind = CouplingKind.OHMIC
    beta: float = 0.0
    cutoff: float = 0.0
    table: tuple | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingKind(self.kind))
        if self.beta < 0:
            raise DomainError("beta must be non-negative")
        if self.cutoff < 0:
            raise DomainError("cutoff must be non-negative")
        if self.kind in (CouplingKind.OHMIC_CUTOFF_EXP, CouplingKind.LORENTZIAN) and not self.cutoff > 0:
            raise DomainError(f"{self.kind.value} coupling needs a positive cutoff")
        if self.kind is CouplingKind.TABULATED:
            if self.table is None:
                raise DomainError("Tabulated coupling needs a table")
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 8:
                raise DomainError("table must hold at least 8 (omega, |f|^2) pairs")
            if np.any(np.diff(tab[:, 0]) <= 0) or tab[0, 0] < 0:
                raise DomainError("table frequencies must be non-negative and strictly increasing")
            if np.any(tab[:, 1] < 0):
                raise DomainError("|f|^2 must be non-negative")
            object.__setattr__(self, "table", tuple(map(tuple, tab)))

    @classmethod
    def ohmic(cls, beta, cutoff=0.0):
        return cls(CouplingKind.OHMIC, beta=beta, cutoff=cutoff)

    @classmethod
    def ohmic_exp(cls, beta, cutoff):
        return cls(CouplingKind.OHMIC_CUTOFF_EXP, beta=beta, cutoff=cutoff)

    @classmethod
    def lorentzian(cls, beta, width):
        return cls(CouplingKind.LORENTZIAN, beta=beta, cutoff=width)

    @classmethod
    def tabulated(cls, omega, f_sq):
        return cls(CouplingKind.TABULATED, table=tuple(zip(omega, f_sq)))

    # -- classification ---------------------------------------------------
    @property
    def is_zero(self) -> bool:
        if self.kind is CouplingKind.TABULATED:
            return not any(v for _, v in self.table)
        return self.beta == 0.0

    @property
    def is_exact_ohmic(self) -> bool:
        return self.kind is CouplingKind.OHMIC and self.cutoff == 0.0

    @property
    def is_rational(self) -> bool:
        """True when gamma~(s) is a rational function of s."""
        return self.is_zero or self.is_exact_ohmic or self.kind is CouplingKind.LORENTZIAN

    @property
    def has_cutoff(self) -> bool:
        """True when the noise spectrum int w J(w) dw is finite."""
        if self.is_zero:
            return True
        return self.kind in (CouplingKind.OHMIC_CUTOFF_EXP, CouplingKind.TABULATED) or (
            self.kind is CouplingKind.OHMIC and self.cutoff > 0
        )

    def support(self):
        """Frequency interval outside of which J vanishes."""
        if self.kind is CouplingKind.TABULATED:
            return self.table[0][0], self.table[-1][0]
        if self.kind is CouplingKind.OHMIC and self.cutoff > 0:
            return 0.0, self.cutoff
        return 0.0, math.inf

    # -- spectra ----------------------------------------------------------
    def spectral_density(self, omega, params: MediumParams | None = None):
        """J(w) = (8 pi / hbar c^3) w^3 |f(w)|^2 for w > 0."""
        w = np.asarray(omega, dtype=float)
        if self.kind is CouplingKind.TABULATED:
            if params is None:
                raise DomainError("tabulated coupling needs medium constants")
            return 8 * np.pi / (params.hbar * params.c**3) * w**3 * self.f_squared(w, params)
        flat = 2 * self.beta / np.pi
        if self.kind is CouplingKind.OHMIC:
            if self.cutoff > 0:
                return np.where(w <= self.cutoff, flat, 0.0) * np.ones_like(w)
            return flat * np.ones_like(w)
        if self.kind is CouplingKind.OHMIC_CUTOFF_EXP:
            return flat * np.exp(-w / self.cutoff)
        return flat * self.cutoff**2 / (self.cutoff**2 + w**2)

    def f_squared(self, omega, params: MediumParams):
        """|f(w)|^2, the reservoir coupling profile."""
        w = np.asarray(omega, dtype=float)
        if self.kind is CouplingKind.TABULATED:
            tab = np.asarray(self.table)
            return np.interp(w, tab[:, 0], tab[:, 1], left=0.0, right=0.0)
        with np.errstate(divide="ignore"):
            return params.hbar * params.c**3 * self.spectral_density(w) / (8 * np.pi * w**3)

    def noise_density(self, omega, params: MediumParams):
        """S(w) = (4 pi / c^3) w^4 |f|^2 = (hbar w / 2) J(w)."""
        w = np.asarray(omega, dtype=float)
        return 0.5 * params.hbar * w * self.spectral_density(w, params)

    def bath_amplitude(self, omega, params: MediumParams):
        """Per-mode coupling F(w) of the frequency-labelled bath, F^2 = hbar J / (2 w)."""
        w = np.asarray(omega, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(params.hbar * self.spectral_density(w, params) / (2 * w))

    def laplace_rational(self):
        """gamma~(s) as (numerator, denominator) polynomials, for rational kinds."""
        if self.is_zero:
            return Polynomial([0.0]), Polynomial([1.0])
        if self.is_exact_ohmic:
            return Polynomial([self.beta]), Polynomial([1.0])
        if self.kind is CouplingKind.LORENTZIAN:
            return Polynomial([self.beta * self.cutoff]), Polynomial([self.cutoff, 1.0])
        raise DomainError(f"{self.kind.value} coupling has no rational Laplace transform")

    @property
    def delta_weight(self) -> float:
        """Weight of the delta-function part of gamma(t) (2 beta for exact Ohmic)."""
        return 2 * self.beta if self.is_exact_ohmic else 0.0


@dataclass(frozen=True)
class KernelSample:
    t: float
    gamma: float
    delta_weight: float = 0.0


def _quad(f, a, b, **kw):
    kw.setdefault("epsabs", EPSABS)
    kw.setdefault("epsrel", EPSREL)
    kw.setdefault("limit", _QUAD_LIMIT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, **kw)
    return val


def _pieces(params, coupling):
    """Integration intervals covering the support of J, with breakpoints."""
    lo, hi = coupling.support()
    if coupling.kind is CouplingKind.TABULATED:
        nodes = [row[0] for row in coupling.table]
        return list(zip(nodes[:-1], nodes[1:]))
    if math.isinf(hi):
        scale = coupling.cutoff if coupling.cutoff > 0 else params.omega0
        return [(0.0, 4 * scale), (4 * scale, math.inf)]
    return [(lo, hi)]


def _kernel_closed(coupling, t):
    b, wc = coupling.beta, coupling.cutoff
    if coupling.is_zero:
        return 0.0
    if coupling.kind is CouplingKind.OHMIC and wc > 0:
        return 2 * b * wc / np.pi * np.sinc(wc * t / np.pi)
    if coupling.kind is CouplingKind.OHMIC_CUTOFF_EXP:
        return 2 * b / np.pi * wc / (1 + (wc * t) ** 2)
    if coupling.kind is CouplingKind.LORENTZIAN:
        return b * wc * np.exp(-wc * np.abs(t))
    return None


def memory_kernel(params: MediumParams, coupling: CouplingSpec, t: float, method: str = "quad") -> KernelSample:
    """Memory kernel gamma(t) = int_0^inf J(w) cos(wt) dw.

    For the exact Ohmic coupling the kernel is 2 beta delta(t); the smooth part
    is zero for t > 0 and the distribution is reported through
    ``delta_weight``.  ``method`` is ``"quad"`` (adaptive quadrature),
    ``"closed"`` (closed form, where one exists) or ``"auto"``.
    """
    if t < 0:
        raise DomainError("memory_kernel needs t >= 0 (use evenness for t < 0)")
    if coupling.is_exact_ohmic and not coupling.is_zero:
        if t == 0:
            raise DistributionalKernelError(
                "exact Ohmic kernel is 2 beta delta(t): no finite value at t = 0"
            )
        return KernelSample(t, 0.0, coupling.delta_weight)
    if method in ("closed", "auto"):
        val = _kernel_closed(coupling, t)
        if val is not None:
            return KernelSample(t, float(val), 0.0)
        if method == "closed":
            raise DomainError(f"no closed form for {coupling.kind.value}")
    J = lambda w: float(coupling.spectral_density(w, params))
    total = 0.0
    for a, b in _pieces(params, coupling):
        if t == 0:
            total += _quad(J, a, b)
        else:
            total += _quad(J, a, b, weight="cos", wvar=t)
    return KernelSample(t, total, 0.0)


def kernel_values(params, coupling, t, method="auto"):
    """Vectorised smooth part of gamma on an array of non-negative times."""
    t = np.asarray(t, dtype=float)
    if coupling.is_exact_ohmic or coupling.is_zero:
        return np.zeros_like(t)
    if method in ("closed", "auto"):
        val = _kernel_closed(coupling, t)
        if val is not None:
            return np.asarray(val, dtype=float) * np.ones_like(t)
    return np.array([memory_kernel(params, coupling, ti, method="quad").gamma for ti in t.ravel()]).reshape(t.shape)


def _pv_integral(params, coupling, y):
    """Principal value of int_0^inf J(w) / (w^2 - y^2) dw, y > 0."""
    J = lambda w: float(coupling.spectral_density(w, params))
    total = 0.0
    for a, b in _pieces(params, coupling):
        if a < y < b:
            # split off a finite window around the singularity for QAWC
            hi = min(b, 2 * y) if math.isinf(b) else b
            total += _quad(lambda w: J(w) / (w + y), a, hi, weight="cauchy", wvar=y)
            if hi < b:
                total += _quad(lambda w: J(w) / (w * w - y * y), hi, b)
        else:
            total += _quad(lambda w: J(w) / (w * w - y * y), a, b)
    return total


def kernel_laplace(params: MediumParams, coupling: CouplingSpec, s: complex, warn: bool = True) -> complex:
    """Laplace transform gamma~(s) = s int_0^inf J(w) / (s^2 + w^2) dw.

    Rational couplings are evaluated in closed form anywhere off their
    poles.  Quadrature-defined couplings need Re(s) > 0; a purely imaginary
    s is read as the limit s + 0+ and uses a principal-value quadrature.
    """
    s = complex(s)
    if coupling.is_rational:
        num, den = coupling.laplace_rational()
        return complex(num(s) / den(s))
    if s.real < 0:
        raise DomainError(
            f"quadrature-defined kernel has a branch cut on the imaginary axis; "
            f"no continuation to Re(s) = {s.real:g} < 0"
        )
    if s == 0:
        return complex(0.5 * np.pi * coupling.spectral_density(0.0, params))
    if s.real == 0:
        y = abs(s.imag)
        lo, hi = coupling.support()
        if warn and lo <= y <= hi:
            warnings.warn(
                f"s = {s} lies on the bath continuum; using the principal-value limit",
                BranchPointWarning,
                stacklevel=2,
            )
        pv = _pv_integral(params, coupling, y)
        return complex(0.5 * np.pi * float(coupling.spectral_density(y, params)), s.imag * pv)

    if s.imag < 0:
        return kernel_laplace(params, coupling, s.conjugate(), warn=warn).conjugate()
    return _laplace_upper(params, coupling, s)


def _breaks(coupling, a, b):
    lo, hi = coupling.support()
    pts = [row[0] for row in coupling.table] if coupling.kind is CouplingKind.TABULATED else [hi]
    return [p for p in pts if a < p < b]


def _cquad(f, a, b, coupling):
    """Complex quadrature of f over [a, b] honouring kinks of J."""
    pts = _breaks(coupling, a, b) if not math.isinf(b) else []
    kw = {"points": pts[:_QUAD_LIMIT // 2]} if pts else {}
    re = _quad(lambda w: f(w).real, a, b, **kw)
    im = _quad(lambda w: f(w).imag, a, b, **kw)
    return complex(re, im)


def _laplace_upper(params, coupling, s):
    # s/(s^2 + w^2) = [1/(s + iw) + 1/(s - iw)] / 2; for Im s >= 0 only the
    # second term can be sharply peaked (at w = Im s, width Re s)
    J = lambda w: float(coupling.spectral_density(w, params))
    x, y = s.real, s.imag
    lo, hi = coupling.support()
    total = 0.0j
    smooth = lambda w: J(w) / (s + 1j * w)
    for a, b in _pieces(params, coupling):
        total += _cquad(smooth, a, b, coupling)
    if lo < y < hi:
        half = 0.5 * min(y - lo, y)
        wa, wb = y - half, min(y + half, hi)
        Jy = J(y)
        peak = lambda w: (J(w) - Jy) / (s - 1j * w)
        total += _cquad(peak, wa, wb, coupling)
        # int_wa^wb dw / (s - i w) in closed form
        total += Jy * 1j * (np.log(s - 1j * wb) - np.log(s - 1j * wa))
        outside = [(lo, wa), (wb, hi)]
    else:
        outside = [(lo, hi)]
    far = lambda w: J(w) / (s - 1j * w)
    for a, b in outside:
        if b <= a:
            continue
        if math.isinf(b):
            mid = max(a, coupling.cutoff if coupling.cutoff > 0 else params.omega0) * 4
            total += _cquad(far, a, mid, coupling) + _cquad(far, mid, b, coupling)
        else:
            total += _cquad(far, a, b, coupling)
    return 0.5 * total


def tail_mass(params: MediumParams, coupling: CouplingSpec, omega_max: float) -> float:
    """int_{omega_max}^inf J(w) / w^2 dw.

    This is the mass the bath modes above ``omega_max`` add to the
    polarization at frequencies well below ``omega_max``; a truncated
    bath has to carry it explicitly.
    """
    lo, hi = coupling.support()
    if omega_max >= hi or coupling.is_zero:
        return 0.0
    a = max(omega_max, lo)
    if coupling.kind is CouplingKind.OHMIC:
        return 2 * coupling.beta / np.pi * (1 / a - (0.0 if math.isinf(hi) else 1 / hi))
    J = lambda w: float(coupling.spectral_density(w, params)) / w**2
    return _quad(J, a, hi)


def to_scaled(params: MediumParams, coupling: CouplingSpec | None = None):
    """Convert SI medium (and coupling) to the scaled system hbar = c = eps0 = omega0 = 1."""
    if params.unit_system is UnitSystem.SCALED:
        return params, coupling
    T = 1.0 / params.omega0
    L = params.c / params.omega0
    M = params.hbar * params.omega0 / params.c**2
    Q = math.sqrt(params.eps0 * params.hbar * params.c)
    out = MediumParams(rho=params.rho * L**3 / M, omega0=1.0, alpha=params.alpha * L**3 / Q)
    if coupling is None:
        return out, None
    beta_scale = L**3 * T / M
    if coupling.kind is CouplingKind.TABULATED:
        tab = np.asarray(coupling.table)
        w_si = tab[:, 0]
        J_si = coupling.spectral_density(w_si, params)
        w_new = w_si * T
        with np.errstate(divide="ignore", invalid="ignore"):
            f_new = np.where(w_new > 0, J_si * beta_scale / (8 * np.pi * w_new**3), 0.0)
        cpl = CouplingSpec.tabulated(w_new, f_new)
    else:
        cpl = CouplingSpec(coupling.kind, beta=coupling.beta * beta_scale, cutoff=coupling.cutoff * T)
    return out, cpl
