"""Per-mode operator-coefficient dynamics in a homogeneous absorptive medium.

Every Heisenberg-picture observable X of one transverse mode (wavenumber k,
polarization lambda) is a linear combination of initial operators

    X(t) = c_a(t) a + c_d(t) d + int c_b(w, t) b(w) dw + h.c.

with c-number coefficients.  In the Laplace domain each coefficient is a
rational function whose denominator is the dispersion numerator P_D(s; k);
bath coefficients carry one extra pole at s = -i w.

Normalisations (V = (2 pi)^{-3/2}):

    A     = V sqrt(hbar / 2 eps0 w_k) (a + a^dag)
    pi_F  = -i V eps0 w_k sqrt(hbar / 2 eps0 w_k) (a - a^dag)
    Y     = V sqrt(hbar / 2) (d + d^dag),   pi_Y = -i V sqrt(hbar / 2) (d - d^dag)
    R     = V int F(w) (b + b^dag) dw,      F(w)^2 = hbar J(w) / (2 w)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError, NoLongTimeLimitError, QuadratureError
from .laplace import (
    PoleSet,
    TransferFunction,
    _laurent,
    find_dispersion_poles,
    invert_by_residues,
    invert_numerical,
    rational_poles,
)
from .response import LaplaceResponse, susceptibility

__all__ = [
    "MODE_VOLUME_FACTOR",
    "OBSERVABLES",
    "TIME_PARITY",
    "ModeIndex",
    "CoefficientVector",
    "CoefficientSeries",
    "ModeKernels",
    "coefficients_laplace",
    "evolve_coefficients",
    "evolve_observables",
    "commutator_series",
    "commutator_check",
    "long_time_amplitude",
    "EnergyReport",
    "energy_report",
    "bath_quadrature",
]

MODE_VOLUME_FACTOR = (2 * math.pi) ** -1.5
OBSERVABLES = ("A", "pi_F", "E", "Y", "pi_Y", "Ydot")
# sign picked up by each observable under time reversal
TIME_PARITY = {"A": -1, "pi_F": 1, "E": 1, "Y": 1, "pi_Y": -1, "Ydot": -1}
_S = Polynomial([0.0, 1.0])


@dataclass(frozen=True)
class ModeIndex:
    """Transverse plane-wave mode: wavenumber magnitude and polarization 1 or 2."""

    k: float
    polarization: int = 1

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"mode wavenumber must be positive, got {self.k}")
        if self.polarization not in (1, 2):
            raise DomainError("polarization index must be 1 or 2")

    def omega(self, params) -> float:
        return params.c * self.k

    def vectors(self, direction=(0.0, 0.0, 1.0)):
        """(wavevector, polarization vector) for propagation along ``direction``."""
        n = np.asarray(direction, dtype=float)
        n = n / np.linalg.norm(n)
        helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(n, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return self.k * n, (e1 if self.polarization == 1 else e2)


@dataclass(frozen=True)
class CoefficientVector:
    """Coefficients of a(0), d(0) and b(w, 0) in one observable.

    In the time domain the partners of a^dag, d^dag, b^dag are the complex
    conjugates (``c_a_dag`` etc.).  In the Laplace domain (``s`` set) the
    partner of c(s) is conj(c(conj(s))).
    """

    observable: str
    c_a: complex
    c_d: complex
    omega: np.ndarray | None = None
    c_b: np.ndarray | None = None
    t: float | None = None
    s: complex | None = None

    @property
    def c_a_dag(self):
        return np.conj(self.c_a)

    @property
    def c_d_dag(self):
        return np.conj(self.c_d)

    @property
    def c_b_dag(self):
        return None if self.c_b is None else np.conj(self.c_b)


@dataclass
class CoefficientSeries:
    """Time series of coefficient vectors for one observable.

    ``bath`` evaluates c_b on any frequency array, returning shape
    (len(t), len(omega)); ``c_b`` holds its values on ``omega`` when given.
    """

    observable: str
    t: np.ndarray
    c_a: np.ndarray
    c_d: np.ndarray
    bath: Callable[[np.ndarray], np.ndarray] | None = None
    omega: np.ndarray | None = None
    c_b: np.ndarray | None = None
    kernels: "ModeKernels | None" = None

    def at(self, i) -> CoefficientVector:
        cb = None if self.c_b is None else self.c_b[i]
        return CoefficientVector(self.observable, self.c_a[i], self.c_d[i], self.omega, cb, t=float(self.t[i]))


def _drop_above(p: Polynomial, maxdeg: int, rtol=1e-9) -> Polynomial:
    """Truncate terms of degree > maxdeg that cancel analytically."""
    c = np.asarray(p.coef, dtype=complex)
    if len(c) <= maxdeg + 1:
        return Polynomial(c)
    scale = max(np.max(np.abs(c)), 1e-300)
    if np.max(np.abs(c[maxdeg + 1 :])) > rtol * scale:
        raise DomainError("expected leading-order cancellation did not occur")
    return Polynomial(c[: maxdeg + 1])


def _divide_by_s(num: Polynomial, den: Polynomial):
    """num / (s den), cancelling a common factor s when num(0) vanishes."""
    c = np.asarray(num.coef, dtype=complex)
    scale = max(np.max(np.abs(c)), 1e-300)
    if abs(c[0]) <= 1e-13 * scale:
        return Polynomial(c[1:] if len(c) > 1 else [0.0]), den
    return num, den * _S


class ModeKernels:
    """Laplace-domain kernels of all observables for one mode and direction.

    Forward kernels give t >= 0; backward kernels give the coefficients at
    time -t for t >= 0.  The backward set follows from the forward
    algebra by flipping the signs of the initial A and pi_Y data and of
    the bath frequency, then multiplying by the observable's time parity.
    """

    def __init__(self, resp: LaplaceResponse, mode: ModeIndex, direction: str = "forward"):
        if direction not in ("forward", "backward"):
            raise DomainError(f"direction must be forward or backward, got {direction!r}")
        self.resp, self.mode, self.direction = resp, mode, direction
        m = resp.medium
        self.params = m
        self.k = mode.k
        self.omega_k = mode.omega(m)
        self.sigma_A = math.sqrt(m.hbar / (2 * m.eps0 * self.omega_k))
        self.sigma_Y = math.sqrt(m.hbar / 2)
        V = MODE_VOLUME_FACTOR
        self.a_norm = V * self.sigma_A
        sgn = 1.0 if direction == "forward" else -1.0
        # bath source s (xi - R0) on b(w): V F eta_s s / (s + i eta_w w)
        self.eta_s = -sgn
        self.eta_w = sgn
        self.rational = resp.is_rational
        init = {
            "a": (V * self.sigma_A, -1j * V * m.eps0 * self.omega_k * self.sigma_A, 0.0, 0.0),
            "d": (0.0, 0.0, V * self.sigma_Y, -1j * V * self.sigma_Y),
        }
        if direction == "backward":
            init = {op: (-A0, Pi0, Y0, -P0) for op, (A0, Pi0, Y0, P0) in init.items()}
        self._init = init
        self._tf = {}
        self._poles = {}
        if self.rational:
            self._build_rational()

    # -- rational assembly -------------------------------------------------
    def _solve_poly(self, A0, Pi0, Y0, P0, src):
        m, k = self.params, self.k
        gn, gd = self.resp.coupling.laplace_rational()
        L = self.resp.oscillator_denominator()
        rhs1 = m.eps0 * A0 * _S + Pi0 - m.alpha * Y0
        gd_rhs2 = (m.rho * _S * gd + gn) * Y0 + gd * (P0 + src)
        NA = m.eps0 * m.mu0 * (L * rhs1 + m.alpha * _S * gd_rhs2)
        NY = m.eps0 * ((m.mu0 * m.eps0 * _S * _S + k**2) * gd_rhs2 - m.mu0 * m.alpha * _S * gd * rhs1)
        return NA, NY

    def _observables(self, NA, NY, A0, Y0, P0, PD, bath=False):
        m = self.params
        n = PD.degree() - 1
        # the bath factor B_X only needs to be proper: B_X / (s + i w) is strict
        ydot = _S * NY - Y0 * PD
        out = {
            "A": (NA, PD),
            "pi_F": (_drop_above(m.eps0 * (_S * NA - A0 * PD), n), PD),
            "E": (_drop_above(-(_S * NA - A0 * PD), n), PD),
            "Y": (NY, PD),
            "Ydot": (ydot if bath else _drop_above(ydot, n), PD),
            "pi_Y": _divide_by_s(P0 * PD - m.rho * m.omega0**2 * NY, PD),
        }
        return out

    def _build_rational(self):
        PD = self.resp.dispersion_polynomial(self.k)
        zero = Polynomial([0.0])
        for op, (A0, Pi0, Y0, P0) in self._init.items():
            NA, NY = self._solve_poly(A0, Pi0, Y0, P0, zero)
            for tag, (num, den) in self._observables(NA, NY, A0, Y0, P0, PD).items():
                self._tf[(tag, op)] = TransferFunction.rational(num * TIME_PARITY_SIGN(tag, self.direction), den, self.k)
        NA, NY = self._solve_poly(0.0, 0.0, 0.0, 0.0, _S)
        for tag, (num, den) in self._observables(NA, NY, 0.0, 0.0, 0.0, PD, bath=True).items():
            self._tf[(tag, "b")] = TransferFunction.rational(num * TIME_PARITY_SIGN(tag, self.direction), den, self.k)

    def transfer(self, observable, op) -> TransferFunction:
        """Rational kernel of ``op`` in ``observable`` (bath: the factor B_X)."""
        _check_tag(observable)
        if not self.rational:
            raise DomainError("quadrature-defined coupling has no rational kernels")
        return self._tf[(observable, op)]

    def poles(self, observable, op) -> PoleSet:
        key = (observable, op)
        if key not in self._poles:
            self._poles[key] = rational_poles(self.transfer(observable, op))
        return self._poles[key]

    # -- numeric s-domain evaluation (any coupling) ------------------------
    def _numeric(self, observable, op, s):
        """Solve the 2x2 Laplace-domain system at one s."""
        m, k = self.params, self.k
        s = complex(s)
        g = self.resp.gamma(s, warn=False)
        if op == "b":
            A0 = Pi0 = Y0 = P0 = 0.0
            src = s
        else:
            A0, Pi0, Y0, P0 = self._init[op]
            src = 0.0
        K = m.rho * s * s + m.rho * m.omega0**2 + s * g
        M = np.array([[m.eps0 * s * s + k**2 / m.mu0, -m.alpha * s], [m.alpha * s, K]], dtype=complex)
        rhs = np.array([m.eps0 * s * A0 + Pi0 - m.alpha * Y0, (m.rho * s + g) * Y0 + P0 + src], dtype=complex)
        A, Y = np.linalg.solve(M, rhs)
        val = {
            "A": A,
            "pi_F": m.eps0 * (s * A - A0),
            "E": -(s * A - A0),
            "Y": Y,
            "Ydot": s * Y - Y0,
            "pi_Y": (P0 - m.rho * m.omega0**2 * Y) / s,
        }[observable]
        return val * TIME_PARITY_SIGN(observable, self.direction)

    def kernel_value(self, observable, op, s):
        _check_tag(observable)
        if self.rational:
            return self.transfer(observable, op)(s)
        return self._numeric(observable, op, s)

    def bath_amplitude(self, omega):
        """V F(w) eta_s: the frequency-dependent prefactor of every bath kernel."""
        F = self.resp.coupling.bath_amplitude(omega, self.params)
        return MODE_VOLUME_FACTOR * self.eta_s * np.nan_to_num(F)

    # -- public evaluators -------------------------------------------------
    def laplace(self, observable, s, omega=None) -> CoefficientVector:
        s = complex(s)
        ca = self.kernel_value(observable, "a", s)
        cd = self.kernel_value(observable, "d", s)
        cb = None
        if omega is not None:
            w = np.asarray(omega, dtype=float)
            B = self.kernel_value(observable, "b", s)
            cb = self.bath_amplitude(w) * B / (s + 1j * self.eta_w * w)
        return CoefficientVector(observable, ca, cd, None if omega is None else np.asarray(omega), cb, s=s)

    def time(self, observable, t, op):
        """Time-domain coefficient of ``op`` ('a' or 'd') at times t >= 0."""
        t = np.asarray(t, dtype=float)
        if self.rational:
            return invert_by_residues(self.transfer(observable, op), self.poles(observable, op), t, self.direction)
        ev = lambda s: self._numeric(observable, op, s)
        F = TransferFunction.general(ev, k=self.k)
        return np.array([_numeric_at(F, ti, op, self, observable) for ti in t.ravel()]).reshape(t.shape)

    def bath_time(self, observable, t, omega):
        """c_b(w, t) on the outer product of times and frequencies."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.resp.coupling.is_zero:
            return np.zeros((t.size, w.size), dtype=complex)
        if not self.rational:
            out = np.empty((t.size, w.size), dtype=complex)
            for j, wj in enumerate(w):
                ev = lambda s, wj=wj: self._numeric(observable, "b", s) / (s + 1j * self.eta_w * wj)
                F = TransferFunction.general(ev, k=self.k)
                for i, ti in enumerate(t):
                    out[i, j] = invert_numerical(F, ti) if ti > 0 else 0.0
            return out * self.bath_amplitude(w)[None, :]
        tf = self.transfer(observable, "b")
        poles = self.poles(observable, "b")
        z = 1j * self.eta_w * w  # pole of the bath factor sits at -z
        g = np.zeros((t.size, w.size), dtype=complex)
        for p in poles:
            m = p.multiplicity
            c = _laurent(tf, p.location, m)
            ept = np.exp(p.location * t)
            base = p.location + z
            for i in range(m):
                for a in range(m - i):
                    b = m - 1 - i - a
                    g += c[i] * ((ept * t**a / math.factorial(a))[:, None]) * ((-1.0) ** b / base ** (b + 1))[None, :]
        Bz = np.array([tf(-zz) for zz in z])
        g += Bz[None, :] * np.exp(-np.outer(t, z))
        return g * self.bath_amplitude(w)[None, :]


def _numeric_at(F, t, op, kern, observable):
    if t == 0:
        return kern_initial(kern, observable, op)
    return invert_numerical(F, t)


def kern_initial(kern, observable, op):
    """Canonical t = 0 coefficient of ``op`` in ``observable``."""
    m = kern.params
    A0, Pi0, Y0, P0 = kern._init[op]
    val = {
        "A": A0,
        "pi_F": Pi0,
        "E": -Pi0 / m.eps0,
        "Y": Y0,
        "pi_Y": P0,
        "Ydot": (P0 - m.alpha * A0) / m.rho,
    }[observable]
    return val * TIME_PARITY_SIGN(observable, kern.direction)


def TIME_PARITY_SIGN(tag, direction):
    return TIME_PARITY[tag] if direction == "backward" else 1


def _check_tag(tag):
    if tag not in OBSERVABLES:
        raise DomainError(f"unknown observable {tag!r}; expected one of {OBSERVABLES}")


def coefficients_laplace(resp: LaplaceResponse, mode: ModeIndex, observable: str, s: complex,
                         direction: str = "forward", omega=None) -> CoefficientVector:
    """s-domain coefficient vector of ``observable`` (bath part on ``omega``)."""
    kern = ModeKernels(resp, mode, direction)
    vec = kern.laplace(observable, s, omega)
    if not np.all(np.isfinite([vec.c_a, vec.c_d])):
        from .errors import PoleHitError

        raise PoleHitError(s)
    return vec


def evolve_coefficients(resp: LaplaceResponse, mode: ModeIndex, observable: str, t_grid,
                        direction: str = "auto", omega=None, kernels=None) -> CoefficientSeries:
    """Time-domain coefficients of ``observable`` on ``t_grid``.

    ``direction="auto"`` uses the forward kernels for t >= 0 and the
    backward kernels for t < 0; ``"forward"`` needs t >= 0 and
    ``"backward"`` needs t <= 0.
    """
    _check_tag(observable)
    t = np.asarray(t_grid, dtype=float)
    if direction == "forward" and np.any(t < 0):
        raise DomainError("forward evolution needs t >= 0")
    if direction == "backward" and np.any(t > 0):
        raise DomainError("backward evolution needs t <= 0")
    if direction not in ("auto", "forward", "backward"):
        raise DomainError(f"unknown direction {direction!r}")
    kf = kernels.get("forward") if kernels else None
    kb = kernels.get("backward") if kernels else None
    pos = t >= 0
    neg = ~pos
    ca = np.zeros(t.shape, dtype=complex)
    cd = np.zeros(t.shape, dtype=complex)
    if np.any(pos):
        kf = kf or ModeKernels(resp, mode, "forward")
        ca[pos] = kf.time(observable, t[pos], "a")
        cd[pos] = kf.time(observable, t[pos], "d")
    if np.any(neg):
        kb = kb or ModeKernels(resp, mode, "backward")
        ca[neg] = kb.time(observable, -t[neg], "a")
        cd[neg] = kb.time(observable, -t[neg], "d")

    def bath(w, _t=t, _kf=kf, _kb=kb):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        out = np.zeros((_t.size, w.size), dtype=complex)
        if np.any(pos):
            out[pos] = _kf.bath_time(observable, _t[pos], w)
        if np.any(neg):
            out[neg] = _kb.bath_time(observable, -_t[neg], w)
        return out

    cb = None
    if omega is not None:
        omega = np.asarray(omega, dtype=float)
        cb = bath(omega)
    return CoefficientSeries(observable, t, ca, cd, bath, omega, cb, kf or kb)


def evolve_observables(resp, mode, t_grid, observables=OBSERVABLES, omega=None):
    """Coefficient series for several observables sharing one kernel set."""
    kern = {"forward": ModeKernels(resp, mode, "forward"), "backward": ModeKernels(resp, mode, "backward")}
    return {tag: evolve_coefficients(resp, mode, tag, t_grid, omega=omega, kernels=kern) for tag in observables}


# -- bath-frequency quadrature ----------------------------------------------

def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def bath_quadrature(t_max, peaks, support=(0.0, math.inf), omega_tail=None, n_gl=16, tail_panels=24):
    """Composite Gauss-Legendre nodes and weights on the bath frequency axis.

    Panels are at most ~pi / t_max wide (to follow e^{i w t}), refined
    geometrically toward w = 0 and around each resonance ``(centre, width)``
    in ``peaks``.  An infinite support is closed by the map w = W / u on
    [W, inf) with geometric panels toward u = 0.
    """
    lo, hi = support
    W = omega_tail if omega_tail is not None else 20.0
    top = hi if math.isfinite(hi) else W
    width = min(math.pi / max(t_max, 1e-3), 0.5)
    bps = set(np.linspace(lo, top, max(2, int(math.ceil((top - lo) / width)) + 1)).tolist())
    # geometric refinement toward the lower edge (F^2 ~ 1/w there)
    h = width
    while h > 1e-6 * width:
        h *= 0.5
        bps.add(lo + h)
    for centre, w in peaks:
        if not lo < centre < top:
            continue
        w = max(abs(w), 1e-9)
        d = w / 4
        while d < width:
            for x in (centre - d, centre + d):
                if lo < x < top:
                    bps.add(x)
            d *= 2
        bps.add(centre)
    edges = np.array(sorted(bps))
    edges = edges[np.concatenate(([True], np.diff(edges) > 1e-13 * max(1.0, top)))]
    x, wts = _gl(n_gl)
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (a + b)[:, None]).ravel()
    weights = (0.5 * (b - a)[:, None] * wts[None, :]).ravel()
    if not math.isfinite(hi):
        ue = np.concatenate(([0.0], np.geomspace(1e-6, 1.0, tail_panels)))
        ua, ub = ue[:-1], ue[1:]
        u = (0.5 * (ub - ua)[:, None] * x[None, :] + 0.5 * (ua + ub)[:, None]).ravel()
        uw = (0.5 * (ub - ua)[:, None] * wts[None, :]).ravel()
        nodes = np.concatenate((nodes, W / u))
        weights = np.concatenate((weights, uw * W / u**2))
    return nodes, weights


def _peaks(kern: ModeKernels):
    """Resonances of bath kernels: w = -eta_w Im p with width |Re p|."""
    if not kern.rational:
        return [(kern.omega_k, 0.05)]
    ps = find_dispersion_poles(kern.resp, kern.k)
    return [(-kern.eta_w * p.location.imag, p.location.real) for p in ps if -kern.eta_w * p.location.imag > 0]


def commutator_series(coeffs_A: CoefficientSeries, coeffs_piF: CoefficientSeries, n_gl=8, tol=1e-4,
                      omega_tail=None):
    """Per-time value of [A, pi_F] / (i hbar delta) for one mode.

    Contracts the coefficients with the canonical commutators of a, d and
    b(w).  The bath integral is evaluated on ``bath_quadrature`` nodes and
    again with doubled nodes; ``QuadratureError`` is raised when the two
    differ by more than ``tol``.  Returns (values, doubling change).
    """
    kern = coeffs_A.kernels
    params = kern.params
    disc = np.imag(coeffs_A.c_a * np.conj(coeffs_piF.c_a) + coeffs_A.c_d * np.conj(coeffs_piF.c_d))
    norm = 2.0 / (params.hbar * MODE_VOLUME_FACTOR**2)
    if kern.resp.coupling.is_zero or coeffs_A.bath is None:
        return norm * disc, 0.0
    t_max = float(np.max(np.abs(coeffs_A.t))) if coeffs_A.t.size else 0.0
    peaks = _peaks(kern)
    # oscillatory bath integrands are only resolved on explicit panels, so the
    # mapped tail must start where the integrand (~ w^-3) is negligible
    tail = omega_tail or max(200.0, 10 * kern.omega_k, 10 * max((abs(c) for c, _ in peaks), default=0.0))
    results = []
    for n in (n_gl, 2 * n_gl):
        w, q = bath_quadrature(t_max, peaks, kern.resp.coupling.support(), tail, n)
        vals = np.empty(coeffs_A.t.size)
        # chunk over frequency to bound memory
        acc = np.zeros(coeffs_A.t.size)
        for lo in range(0, w.size, 4096):
            sl = slice(lo, lo + 4096)
            cb = coeffs_A.bath(w[sl])
            cp = coeffs_piF.bath(w[sl])
            acc += np.imag(cb * np.conj(cp)) @ q[sl]
        vals[:] = norm * (disc + acc)
        results.append(vals)
    change = float(np.max(np.abs(results[1] - results[0]))) if results[0].size else 0.0
    if change > tol:
        raise QuadratureError(f"bath quadrature changed by {change:.3g} under node doubling", [change])
    return results[1], change


def commutator_check(coeffs_A: CoefficientSeries, coeffs_piF: CoefficientSeries, n_gl=8, tol=1e-4) -> float:
    """max_t |[A, pi_F] / (i hbar delta) - 1| for one mode."""
    vals, _ = commutator_series(coeffs_A, coeffs_piF, n_gl, tol)
    return float(np.max(np.abs(vals - 1.0))) if vals.size else 0.0


# -- long-time limit ----------------------------------------------------------

def long_time_amplitude(resp: LaplaceResponse, mode: ModeIndex, bath_freq):
    """Surviving coefficient of b(w, 0) in A as t -> infinity.

    c_b(w, t) -> amplitude * exp(-i w t) with

        amplitude = V F(w) (mu0 eps0 / alpha) w^2 chi(-i w) / D(-i w; k),

    D(s; k) = k^2 + mu0 eps0 s^2 eps(s).  Requires every dispersion pole
    strictly inside Re(s) < 0.
    """
    m = resp.medium
    w = np.atleast_1d(np.asarray(bath_freq, dtype=float))
    if m.alpha == 0:
        # decoupled field never reaches the reservoir
        out = np.zeros(w.shape, dtype=complex)
        return complex(out[0]) if np.ndim(bath_freq) == 0 else out
    if resp.coupling.is_zero:
        raise NoLongTimeLimitError("lossless medium: dispersion poles sit on the imaginary axis")
    if resp.is_rational:
        ps = find_dispersion_poles(resp, mode.k)
        if ps.max_real() >= 0:
            raise NoLongTimeLimitError(f"dispersion pole with Re(s) = {ps.max_real():g} does not decay")
    out = np.empty(w.shape, dtype=complex)
    F = resp.coupling.bath_amplitude(w, m)
    for i, wi in enumerate(w):
        s = -1j * wi
        chi = susceptibility(resp, s)
        D = mode.k**2 + m.mu0 * m.eps0 * s * s * (1 + chi)
        out[i] = MODE_VOLUME_FACTOR * F[i] * (m.mu0 * m.eps0 / m.alpha) * wi**2 * chi / D
    return complex(out[0]) if np.ndim(bath_freq) == 0 else out


def transient_decay_time(resp: LaplaceResponse, mode: ModeIndex, factor=200.0):
    """factor / |max Re p| over the dispersion poles."""
    ps = find_dispersion_poles(resp, mode.k)
    mr = ps.max_real()
    if mr >= 0:
        raise NoLongTimeLimitError("no decay")
    return factor / abs(mr)


# -- energy bookkeeping --------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    """Normal-ordered energy excess of each Hamiltonian piece."""

    t: np.ndarray
    field: np.ndarray
    matter: np.ndarray
    bath: np.ndarray
    interaction: np.ndarray

    @property
    def total(self):
        return self.field + self.matter + self.bath + self.interaction


def _expm1_over(z, t):
    """(e^{zt} - 1) / z, with the z -> 0 limit t."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z * t) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, t + 0.5 * z * t * t, np.expm1(safe * t) / safe)


def _exp_kernel_double(p, q, lam, t):
    """int_0^t int_0^t e^{-lam |t1 - t2|} e^{p t1} e^{q t2} dt1 dt2."""

    def part(a, b):
        # int_0^t e^{a t1} int_0^t1 e^{b t2} dt2 dt1 = [E(a + b) - E(a)] / b
        if abs(b) < 1e-8:
            # limit b -> 0: int_0^t e^{a t1} t1 dt1
            return (t * np.exp(a * t) - _expm1_over(a, t)) / a if abs(a) > 1e-12 else t * t / 2
        return (_expm1_over(a + b, t) - _expm1_over(a, t)) / b

    return part(p - lam, q + lam) + part(q - lam, p + lam)


def _bath_energy(kern: ModeKernels, t):
    """(1 / V^2) int int gamma(t1 - t2) Ydot(t1) conj(Ydot(t2)) on [0, t]^2.

    Exact for rational couplings (delta and single-exponential kernels) with
    Ydot a finite sum of exponentials.
    """
    cpl = kern.resp.coupling
    if cpl.is_zero:
        return np.zeros_like(t)
    ps = kern.poles("Ydot", "a")
    if any(p.multiplicity > 1 for p in ps):
        raise DomainError("energy bookkeeping needs simple dispersion poles")
    r = np.array([p.residue for p in ps])
    z = np.array([p.location for p in ps])
    total = np.zeros(t.shape)
    for i, ti in enumerate(t):
        acc = 0.0j
        if cpl.is_exact_ohmic:
            acc = cpl.delta_weight * np.sum(np.outer(r, r.conj()) * _expm1_over(z[:, None] + z.conj()[None, :], ti))
        else:  # Lorentzian: beta W e^{-W |tau|}
            lam = cpl.cutoff
            wgt = cpl.beta * cpl.cutoff
            for j in range(z.size):
                for l in range(z.size):
                    acc += wgt * r[j] * np.conj(r[l]) * _exp_kernel_double(z[j], np.conj(z[l]), lam, ti)
        total[i] = acc.real
    return total / MODE_VOLUME_FACTOR**2


def energy_report(coeffs: dict, resp: LaplaceResponse, mode: ModeIndex, state: str = "one_photon") -> EnergyReport:
    """Energy excess of field, matter, bath and interaction pieces.

    ``coeffs`` maps observable tags (A, pi_F, Y, pi_Y, Ydot) to coefficient
    series on a common grid of t >= 0.  For the one-photon state a^dag|0>,
    <:X^2:> = 2 |c_a|^2 for each quadratic term; the vacuum gives zero.
    """
    t = np.asarray(coeffs["A"].t, dtype=float)
    if state == "vacuum":
        z = np.zeros(t.shape)
        return EnergyReport(t, z, z, z, z)
    if state != "one_photon":
        raise DomainError(f"unknown state {state!r}")
    if np.any(t < 0):
        raise DomainError("energy bookkeeping runs forward in time")
    m = resp.medium
    V2 = MODE_VOLUME_FACTOR**2
    k = mode.k
    A, Pi = coeffs["A"].c_a, coeffs["pi_F"].c_a
    Y, PY, Yd = coeffs["Y"].c_a, coeffs["pi_Y"].c_a, coeffs["Ydot"].c_a
    e_field = (np.abs(Pi) ** 2 / m.eps0 + k**2 * np.abs(A) ** 2 / m.mu0) / V2
    e_matter = (np.abs(PY) ** 2 / m.rho + m.rho * m.omega0**2 * np.abs(Y) ** 2) / V2
    e_int = (m.rho * np.abs(Yd) ** 2 - np.abs(PY) ** 2 / m.rho) / V2
    kern = coeffs["A"].kernels or ModeKernels(resp, mode, "forward")
    e_bath = _bath_energy(kern, t)
    return EnergyReport(t, e_field, e_matter, e_bath, e_int)
