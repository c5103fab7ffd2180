"""Inverse Laplace transforms: pole finding, residue sums and a contour oracle."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .errors import (
    ActiveMediumError,
    ContourFailure,
    ConvergenceError,
    DivergenceError,
    DomainError,
)
from .response import LaplaceResponse, format_float

__all__ = [
    "TransferKind",
    "TransferFunction",
    "Pole",
    "PoleSet",
    "polynomial_roots",
    "rational_poles",
    "find_dispersion_poles",
    "invert_by_residues",
    "invert_numerical",
    "root_modulus_bound",
]

NEWTON_TOL = 1e-12
MERGE_TOL = 1e-8
GROUP_TOL = 1e-3


class TransferKind(str, enum.Enum):
    RATIONAL = "rational"
    GENERAL = "general"


@dataclass(frozen=True)
class TransferFunction:
    """A Laplace-domain function F(s).

    Rational functions carry numerator and denominator polynomials (numpy
    ``Polynomial``, ascending complex coefficients).  General functions are
    given by an evaluator only, plus an optional bound on the modulus of
    their singularities.
    """

    evaluator: Callable[[complex], complex]
    kind: TransferKind = TransferKind.GENERAL
    numer: Polynomial | None = None
    denom: Polynomial | None = None
    k: float | None = None
    singularity_bound: float | None = None

    @classmethod
    def rational(cls, numer, denom, k=None):
        numer = numer if isinstance(numer, Polynomial) else Polynomial(numer)
        denom = denom if isinstance(denom, Polynomial) else Polynomial(denom)
        numer = Polynomial(np.asarray(numer.coef, dtype=complex))
        denom = Polynomial(np.asarray(denom.coef, dtype=complex))
        numer, denom = _trim(numer), _trim(denom)
        if denom.degree() < numer.degree():
            raise DomainError("transfer function is improper (numerator degree exceeds denominator)")

        def ev(s, _n=numer, _d=denom):
            return complex(_n(s) / _d(s))

        return cls(ev, TransferKind.RATIONAL, numer, denom, k)

    @classmethod
    def general(cls, evaluator, singularity_bound=None, k=None):
        return cls(evaluator, TransferKind.GENERAL, None, None, k, singularity_bound)

    def __call__(self, s):
        return self.evaluator(complex(s))

    @property
    def is_rational(self):
        return self.kind is TransferKind.RATIONAL

    def __add__(self, other):
        if not (self.is_rational and other.is_rational):
            raise DomainError("sum of general transfer functions is not supported")
        return TransferFunction.rational(
            self.numer * other.denom + other.numer * self.denom, self.denom * other.denom, self.k
        )

    def scale(self, c):
        if self.is_rational:
            return TransferFunction.rational(self.numer * c, self.denom, self.k)
        f = self.evaluator
        return TransferFunction.general(lambda s: c * f(s), self.singularity_bound, self.k)

    def check_consistency(self, n=64, seed=0, rtol=1e-10):
        """Compare the rational form with the evaluator at random points."""
        if not self.is_rational:
            return True
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.1, 5.0, n) + 1j * rng.uniform(-5.0, 5.0, n)
        for s in pts:
            a = self.evaluator(s)
            b = complex(self.numer(s) / self.denom(s))
            if abs(a - b) > rtol * max(abs(b), 1e-300):
                return False
        return True


def _trim(p: Polynomial) -> Polynomial:
    c = np.asarray(p.coef, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return Polynomial([0.0j])
    nz = np.nonzero(np.abs(c) > 1e-300)[0]
    return Polynomial(c[: nz[-1] + 1])


@dataclass(frozen=True)
class Pole:
    location: complex
    residue: complex
    multiplicity: int = 1


@dataclass(frozen=True)
class PoleSet:
    """Poles of a transfer function.

    ``residue`` holds the residue of the function the set was built from
    (for dispersion poles, of 1 / D(s; k)).
    """

    poles: tuple
    k: float | None = None

    def __iter__(self):
        return iter(self.poles)

    def __len__(self):
        return len(self.poles)

    @property
    def locations(self):
        return np.array([p.location for p in self.poles], dtype=complex)

    @property
    def total_multiplicity(self):
        return sum(p.multiplicity for p in self.poles)

    def max_real(self):
        return max(p.location.real for p in self.poles)

    def to_csv(self, header=True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["k", "re_s", "im_s", "re_residue", "im_residue", "multiplicity"])
        kk = float("nan") if self.k is None else self.k
        for p in self.poles:
            w.writerow(
                [format_float(kk), format_float(p.location.real), format_float(p.location.imag),
                 format_float(p.residue.real), format_float(p.residue.imag), str(p.multiplicity)]
            )
        return buf.getvalue()


def _newton(f, df, z, tol=NEWTON_TOL, maxit=50):
    for _ in range(maxit):
        d = df(z)
        if d == 0:
            break
        step = f(z) / d
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            break
    return z


def polynomial_roots(poly: Polynomial, merge_tol: float = MERGE_TOL):
    """Roots of a polynomial with multiplicities.

    Companion-matrix eigenvalues are grouped, each group's centroid is
    Newton-polished on the (m-1)-th derivative, and the result is accepted
    as an m-fold root when all lower derivatives vanish there.  Otherwise
    the members are polished individually and merged at ``merge_tol``.
    Returns a list of (root, multiplicity) sorted by (imag, real).
    """
    poly = _trim(poly)
    if poly.degree() < 1:
        return []
    raw = poly.roots()
    raw = np.atleast_1d(raw).astype(complex)
    scale_c = np.max(np.abs(poly.coef))
    # an m-fold root scatters by ~eps^(1/m); groups are confirmed by the derivative test below
    groups = _cluster(raw, lambda z: GROUP_TOL * max(1.0, abs(z)))
    out = []
    derivs = [poly] + [poly.deriv(j) for j in range(1, poly.degree() + 1)]
    for grp in groups:
        m = len(grp)
        if m > 1:
            c = np.mean(grp)
            c = _newton(derivs[m - 1], derivs[m], c)
            ok = all(
                abs(derivs[j](c)) <= 1e-9 * scale_c * max(1.0, abs(c)) ** (poly.degree() - j)
                for j in range(m - 1)
            )
            if ok:
                out.append((complex(c), m))
                continue
        for z in grp:
            out.append((complex(_newton(poly, derivs[1], z)), 1))
    # final merge at the documented separation
    merged = []
    for grp in _cluster(np.array([z for z, _ in out]), lambda z: merge_tol):
        mult = sum(m for z, m in out if any(z == g for g in grp))
        merged.append((complex(np.mean(grp)), mult))
    merged.sort(key=lambda zm: (round(zm[0].imag, 12), round(zm[0].real, 12)))
    return merged


def _cluster(points, tol):
    """Single-linkage clustering with a per-point tolerance."""
    pts = list(points)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(pts[i] - pts[j]) <= max(tol(pts[i]), tol(pts[j])):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(pts[i])
    return list(groups.values())


def _laurent(F: TransferFunction, p: complex, m: int):
    """Coefficients c_0..c_{m-1} with F(p + x) = sum_i c_i x^(i - m) + O(1)."""
    shift = Polynomial([p, 1.0])
    N = F.numer(shift).coef
    D = F.denom(shift).coef
    # drop the m (numerically tiny) leading Taylor terms of D at the root
    Q = np.zeros(m, dtype=complex)
    Dq = np.zeros(m, dtype=complex)
    Dq[: max(0, min(m, len(D) - m))] = D[m : m + m]
    Nq = np.zeros(m, dtype=complex)
    Nq[: min(m, len(N))] = N[:m]
    if Dq[0] == 0:
        raise DomainError(f"multiplicity {m} exceeds the pole order at {p}")
    for i in range(m):
        acc = Nq[i] - sum(Q[j] * Dq[i - j] for j in range(i))
        Q[i] = acc / Dq[0]
    return Q


def rational_poles(F: TransferFunction, merge_tol: float = MERGE_TOL) -> PoleSet:
    """All poles of a rational transfer function with their residues."""
    if not F.is_rational:
        raise DomainError("pole enumeration needs a rational transfer function")
    poles = []
    for z, m in polynomial_roots(F.denom, merge_tol):
        c = _laurent(F, z, m)
        poles.append(Pole(z, complex(c[m - 1]), m))
    return PoleSet(tuple(poles), F.k)


def _dispersion_transfer(resp: LaplaceResponse, k: float) -> TransferFunction:
    """1 / D(s; k) as a rational function."""
    m = resp.medium
    return TransferFunction.rational(m.eps0 * resp.oscillator_denominator(), resp.dispersion_polynomial(k), k)


def find_dispersion_poles(resp: LaplaceResponse, k: float, seeds_per_axis: int = 24, active_tol: float = 1e-12) -> PoleSet:
    """Roots of D(s; k) = k^2 + mu0 eps0 s^2 eps(s).

    Rational couplings reduce to a polynomial root problem.  General
    couplings are handled by Newton iteration on D seeded over the
    rectangle [-5 w0, 0] x [-i(kc + 5 w0), i(kc + 5 w0)], which requires an
    evaluator continuable to Re(s) <= 0 (quadrature-defined kernels are not).
    Roots with Re(s) > 0 raise ``ActiveMediumError``.
    """
    if k < 0:
        raise DomainError("k must be non-negative")
    med = resp.medium
    if resp.is_rational:
        ps = rational_poles(_dispersion_transfer(resp, k))
        active = [p.location for p in ps if p.location.real > active_tol * max(1.0, abs(p.location))]
        if active:
            raise ActiveMediumError(active)
        return ps
    return _newton_dispersion(resp, k, seeds_per_axis, active_tol)


def _newton_dispersion(resp, k, n, active_tol):
    med = resp.medium
    w0 = med.omega0
    height = k * med.c + 5 * w0
    D = lambda s: resp.dispersion(s, k)

    def dD(s, h=1e-7):
        return (D(s + h) - D(s - h)) / (2 * h)

    found, bad = [], []
    for x in np.linspace(-5 * w0, 0.0, max(2, n // 4)):
        for y in np.linspace(-height, height, n):
            z = complex(x, y)
            try:
                for _ in range(60):
                    step = D(z) / dD(z)
                    z -= step
                    if abs(step) < NEWTON_TOL * max(1.0, abs(z)):
                        break
                else:
                    bad.append(complex(x, y))
                    continue
            except (ArithmeticError, DomainError):
                bad.append(complex(x, y))
                continue
            if abs(z.real) <= 10 * w0 and abs(z.imag) <= 2 * height:
                found.append(z)
    if not found:
        raise ConvergenceError("no dispersion root converged from the seed grid", bad)
    roots = [complex(np.mean(g)) for g in _cluster(np.array(found), lambda z: 1e-7 * max(1.0, abs(z)))]
    active = [z for z in roots if z.real > active_tol * max(1.0, abs(z))]
    if active:
        raise ActiveMediumError(active)
    poles = []
    for z in sorted(roots, key=lambda z: (round(z.imag, 12), round(z.real, 12))):
        poles.append(Pole(z, 1.0 / dD(z), 1))
    return PoleSet(tuple(poles), k)


def invert_by_residues(F: TransferFunction, poles: PoleSet | None, t, direction: str = "forward"):
    """Sum of the residues of e^{st} F(s).

    ``direction="forward"`` reconstructs g(t) for t >= 0 from its forward
    transform; ``"backward"`` reconstructs g(-t) for t >= 0 from the
    backward transform int_0^inf g(-t) e^{-st} dt (same residue sum).
    Multiple poles use the Laurent expansion of F.  ``poles`` may be None,
    in which case they are computed from the denominator.
    """
    if direction not in ("forward", "backward"):
        raise DomainError(f"direction must be forward or backward, got {direction!r}")
    if not F.is_rational:
        raise DomainError("residue inversion needs a rational transfer function; use invert_numerical")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("inversion time must be non-negative")
    if poles is None:
        poles = rational_poles(F)
    if poles.total_multiplicity != F.denom.degree():
        raise DomainError(
            f"pole set has total multiplicity {poles.total_multiplicity}, "
            f"denominator degree is {F.denom.degree()}"
        )
    tmax = float(np.max(t_arr)) if t_arr.size else 0.0
    out = np.zeros(t_arr.shape, dtype=complex)
    for p in poles:
        z = p.location
        if z.real * tmax > 700:
            raise DivergenceError(f"pole at {z} with Re > 0 overflows e^(st) at t = {tmax:g}")
        c = _laurent(F, z, p.multiplicity)
        m = p.multiplicity
        poly = np.zeros(t_arr.shape, dtype=complex)
        for j in range(m):
            poly = poly + c[m - 1 - j] * t_arr**j / math.factorial(j)
        out = out + np.exp(z * t_arr) * poly
    return complex(out) if out.ndim == 0 else out


def root_modulus_bound(poly: Polynomial, graeffe_steps: int = 3) -> float:
    """Upper bound on the modulus of every root, without computing roots.

    Fujiwara's bound applied after ``graeffe_steps`` root-squaring steps, so
    the overestimate factor is at most 2**(1 / 2**graeffe_steps).
    """
    c = np.asarray(_trim(poly).coef, dtype=complex)
    n = len(c) - 1
    if n < 1:
        return 0.0
    c = c / c[-1]
    # rescale x -> scale*y so roots are O(1); squaring tiny roots underflows to 0
    scale = _fujiwara(c)
    if scale < 1e-150:
        # far below any contour scale; plain bound is enough and rescaling would overflow
        return float(scale)
    scaled = c.copy()
    for j in range(1, n + 1):
        # c[n-j] / scale**j one factor at a time; |result| <= 2**-j, no overflow
        scaled[: n - j + 1] /= scale
    p = Polynomial(scaled)
    for _ in range(graeffe_steps):
        # q(x^2) = (-1)^n p(x) p(-x)
        pm = Polynomial(p.coef * (-1.0) ** np.arange(len(p.coef)))
        prod = (p * pm).coef * (-1.0) ** n
        q = prod[::2]
        q = q / q[-1]
        # renormalise the coefficient scale to avoid overflow
        p = Polynomial(q)
    return float(scale * _fujiwara(p.coef) ** (1.0 / 2**graeffe_steps))


def _fujiwara(a):
    """Fujiwara's root-modulus bound for monic coefficients ``a`` (ascending)."""
    n = len(a) - 1
    terms = [abs(a[n - j]) ** (1.0 / j) for j in range(1, n)]
    terms.append(abs(a[0]) ** (1.0 / n) * 0.5 ** (1.0 / n))
    return 2 * max(terms)


def _mp_rational(F):
    nc = [mp.mpc(z.real, z.imag) for z in F.numer.coef[::-1]]
    dc = [mp.mpc(z.real, z.imag) for z in F.denom.coef[::-1]]
    return lambda s: mp.polyval(nc, s) / mp.polyval(dc, s)


def _talbot(Fmp, t, r, M):
    """Fixed-Talbot contour sum over the full symmetric contour."""
    total = Fmp(r) * mp.exp(r * t)
    mags = [abs(Fmp(r))]
    pi = mp.pi
    for j in range(1, M):
        th = j * pi / M
        cot = mp.cot(th)
        sig = th / mp.sin(th) ** 2 - cot
        for sgn in (1, -1):
            tj = sgn * th
            s = r * tj * (sgn * cot + 1j)
            Fs = Fmp(s)
            mags.append(abs(Fs) / max(abs(s), 1))
            total += mp.exp(s * t) * Fs * (1 + 1j * sgn * sig)
    return complex(total * r / (2 * M)), mags


def invert_numerical(F: TransferFunction, t: float, M: int = 64, sigma: float | None = None,
                     max_retries: int = 3):
    """Numerical inverse Laplace transform (cross-check oracle, not fast).

    Rational functions use a fixed-Talbot contour evaluated in extended
    precision.  The contour scale is set from a root-free bound on the
    singularity moduli (or ``F.singularity_bound``) so that every pole is
    enclosed; at least ``M`` nodes are used, more when r t is large.
    General functions use the Bromwich line Re(s) = sigma with oscillatory
    quadrature, which requires F analytic for Re(s) >= sigma > 0.
    """
    if not t > 0:
        raise DomainError("invert_numerical needs t > 0")
    if not F.is_rational and F.singularity_bound is None:
        return _bromwich(F, t, sigma)
    R = F.singularity_bound if F.singularity_bound is not None else root_modulus_bound(F.denom)
    Fmp = _mp_rational(F) if F.is_rational else (lambda s: mp.mpmathify(F.evaluator(complex(s))))
    r = max(1.2 * R, 4.0 / t)
    last = None
    for _ in range(max_retries):
        nodes = max(M, int(math.ceil(2.5 * r * t)))
        dps = int(r * t / 2.3 + 0.6 * nodes + 20)
        with mp.workdps(dps):
            val, mags = _talbot(Fmp, mp.mpf(t), mp.mpf(r), nodes)
        med = float(np.median([float(x) for x in mags]))
        peak = float(max(mags))
        if med > 0 and peak > 1e10 * med:
            # a node landed next to a pole
            last = ContourFailure(f"contour node within reach of a pole (peak/median {peak / med:.3g})", [r])
            r *= 1.37
            continue
        return val
    raise last


def _bromwich(F, t, sigma):
    sigma = 1.0 / t if sigma is None else sigma
    if sigma <= 0:
        raise DomainError("Bromwich line must lie in Re(s) > 0")
    ev = F.evaluator
    plus_re = lambda w: (ev(sigma + 1j * w) + ev(sigma - 1j * w)).real
    plus_im = lambda w: (ev(sigma + 1j * w) + ev(sigma - 1j * w)).imag
    minus_re = lambda w: (ev(sigma + 1j * w) - ev(sigma - 1j * w)).real
    minus_im = lambda w: (ev(sigma + 1j * w) - ev(sigma - 1j * w)).imag
    kw = dict(weight="cos", wvar=t, limlst=200)
    c_re = integrate.quad(plus_re, 0, np.inf, **kw)[0]
    c_im = integrate.quad(plus_im, 0, np.inf, **kw)[0]
    kw["weight"] = "sin"
    s_re = integrate.quad(minus_re, 0, np.inf, **kw)[0]
    s_im = integrate.quad(minus_im, 0, np.inf, **kw)[0]
    # int_{-inf}^{inf} F(sigma+iw) e^{iwt} dw, split into cosine and sine halves
    total = complex(c_re, c_im) + 1j * complex(s_re, s_im)
    return complex(math.exp(sigma * t) / (2 * math.pi) * total)
