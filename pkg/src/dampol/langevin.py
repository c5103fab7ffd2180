"""Mean-value Langevin dynamics with memory, and vacuum noise correlations."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DivergenceError, DomainError, StepTooLargeError
from .medium import CouplingKind, CouplingSpec, MediumParams, kernel_values

__all__ = [
    "LangevinProblem",
    "Trajectory",
    "integrate_mean",
    "NoiseCorrelation",
    "noise_correlation",
    "FdtReport",
    "fdt_residual",
]

MEMORY_CUT = 1e-12


@dataclass(frozen=True)
class LangevinProblem:
    """Polarization equation rho y'' + rho w0^2 y + int gamma(t-t') y' dt' = alpha E(t).

    ``drive`` holds E sampled on ``t_grid`` (None means no drive).
    ``t_grid`` must be uniform and start at 0.
    """

    medium: MediumParams
    coupling: CouplingSpec
    t_grid: np.ndarray
    y0: float = 0.0
    v0: float = 0.0
    drive: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        object.__setattr__(self, "t_grid", t)
        if t.ndim != 1 or t.size < 2:
            raise DomainError("t_grid needs at least two samples")
        h = t[1] - t[0]
        if not h > 0 or abs(t[0]) > 1e-14 * max(1.0, h):
            raise DomainError("t_grid must start at 0 and increase")
        if np.max(np.abs(np.diff(t) - h)) > 1e-9 * h:
            raise DomainError("t_grid must be uniform")
        if self.drive is not None:
            d = np.asarray(self.drive, dtype=float)
            if d.shape != t.shape:
                raise DomainError("drive must be sampled on t_grid")
            object.__setattr__(self, "drive", d)

    @property
    def step(self):
        return float(self.t_grid[1] - self.t_grid[0])

    @classmethod
    def from_drive_csv(cls, medium, coupling, text, y0=0.0, v0=0.0):
        """Build a problem from CSV text with columns t, E."""
        import csv
        import io

        rows = list(csv.reader(io.StringIO(text)))
        if [c.strip() for c in rows[0]] != ["t", "E"]:
            raise DomainError(f"drive CSV header must be t,E; got {rows[0]}")
        data = np.array(rows[1:], dtype=float)
        return cls(medium, coupling, data[:, 0], y0, v0, data[:, 1])


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    v: np.ndarray

    def energy(self, medium: MediumParams):
        return 0.5 * medium.rho * self.v**2 + 0.5 * medium.rho * medium.omega0**2 * self.y**2


def _damping_scale(coupling: CouplingSpec) -> float:
    if coupling.is_exact_ohmic:
        return coupling.delta_weight / 2
    return coupling.beta


def integrate_mean(problem: LangevinProblem) -> Trajectory:
    """Second-order Volterra integration of the mean polarization.

    Crank-Nicolson for the local terms and the trapezoidal rule for the
    memory integral (its newest node is treated implicitly).  A delta part
    2 beta delta(t) of the kernel sits on the integration boundary and
    contributes beta y'(t).  The kernel is truncated once |gamma| falls
    below 1e-12 gamma(0) for good.
    """
    m, cpl = problem.medium, problem.coupling
    t = problem.t_grid
    h = problem.step
    bound = 0.1 / max(m.omega0, _damping_scale(cpl) / m.rho)
    if h >= bound:
        raise StepTooLargeError(h, 0.5 * bound)
    n = t.size
    gam = kernel_values(m, cpl, t, method="auto")
    g0 = abs(gam[0]) if gam.size else 0.0
    if g0 > 0:
        above = np.nonzero(np.abs(gam) >= MEMORY_CUT * g0)[0]
        mem_len = int(above[-1]) + 1 if above.size else 1
    else:
        mem_len = 0
    gam = gam[:mem_len]
    local = cpl.delta_weight / 2
    E = np.zeros(n) if problem.drive is None else problem.drive
    force = m.alpha * E
    y = np.empty(n)
    v = np.empty(n)
    y[0], v[0] = problem.y0, problem.v0
    rho, k = m.rho, m.rho * m.omega0**2

    def memory(j, vnext):
        """Trapezoid for int_0^{t_j} gamma(t_j - t') v(t') dt' with v_j = vnext."""
        if mem_len == 0 or j == 0:
            return 0.0
        acc = 0.5 * gam[0] * vnext if mem_len > 0 else 0.0
        lo = max(1, j - mem_len + 1)
        if j - 1 >= lo:
            # gamma_{j-i} for i = lo .. j-1
            acc += np.dot(gam[j - np.arange(lo, j)], v[lo:j])
        if j < mem_len:
            acc += 0.5 * gam[j] * v[0]
        return h * acc

    M_prev = 0.0
    for i in range(n - 1):
        # memory at t_{i+1} splits into an explicit part and 0.5 h gamma_0 v_{i+1}
        M_exp = memory(i + 1, 0.0)
        c_impl = 0.5 * h * gam[0] if mem_len > 0 else 0.0
        # y_{i+1} = y_i + h/2 (v_i + v_{i+1})
        # rho (v_{i+1} - v_i) = h/2 [ -k (y_i + y_{i+1}) - (M_i + M_{i+1})
        #                            - local (v_i + v_{i+1}) + f_i + f_{i+1} ]
        a = rho + 0.5 * h * (0.5 * h * k) + 0.5 * h * (c_impl + local)
        rhs = (
            rho * v[i]
            + 0.5 * h * (-k * (2 * y[i] + 0.5 * h * v[i]) - M_prev - M_exp - local * v[i] + force[i] + force[i + 1])
        )
        v[i + 1] = rhs / a
        y[i + 1] = y[i] + 0.5 * h * (v[i] + v[i + 1])
        M_prev = M_exp + c_impl * v[i + 1]
    return Trajectory(t, y, v)


@dataclass(frozen=True)
class NoiseCorrelation:
    """Vacuum two-point function <xi(t) xi(t')> per Cartesian component.

    The spatial dependence is a delta function in r - r' (``spatial_weight``).
    """

    tau: np.ndarray
    corr: np.ndarray
    spatial_weight: str = "delta(r - r')"


def _require_finite_noise(coupling: CouplingSpec):
    if not coupling.has_cutoff:
        raise DivergenceError(
            f"{coupling.kind.value} coupling without a decaying cutoff has a divergent noise spectrum"
        )


def _support_pieces(coupling, params):
    lo, hi = coupling.support()
    if coupling.kind is CouplingKind.TABULATED:
        nodes = [row[0] for row in coupling.table]
        return list(zip(nodes[:-1], nodes[1:]))
    if math.isinf(hi):
        return [(0.0, math.inf)]
    return [(lo, hi)]


def _fourier(f, pieces, tau, kind):
    """int f(w) cos(w tau) or sin(w tau) dw over the support pieces."""
    total = 0.0
    for a, b in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            if tau == 0:
                val = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=500)[0] if kind == "cos" else 0.0
            elif math.isinf(b) and tau * max(a, 1.0) < 1e-3:
                # QAWF cycles of length pi / tau would probe f at absurd frequencies
                trig = math.cos if kind == "cos" else math.sin
                val = integrate.quad(lambda w: f(w) * trig(w * tau), a, b, epsabs=1e-13, epsrel=1e-11, limit=500)[0]
            else:
                val = integrate.quad(f, a, b, weight=kind, wvar=tau, epsabs=1e-13, epsrel=1e-11, limit=500)[0]
        total += val
    return total


def noise_correlation(medium: MediumParams, coupling: CouplingSpec, tau_grid) -> NoiseCorrelation:
    """C(tau) = int_0^inf S(w) e^{-i w tau} dw with S = (4 pi / c^3) w^4 |f|^2 = hbar w J / 2.

    Evaluated by quadrature; raises ``DivergenceError`` when the spectrum
    has no decaying cutoff.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if coupling.is_zero:
        return NoiseCorrelation(tau, np.zeros(tau.shape, dtype=complex))
    _require_finite_noise(coupling)
    S = lambda w: float(coupling.noise_density(w, medium))
    pieces = _support_pieces(coupling, medium)
    out = np.empty(tau.shape, dtype=complex)
    for i, ti in np.ndenumerate(tau):
        re = _fourier(S, pieces, abs(ti), "cos")
        im = -math.copysign(1.0, ti) * _fourier(S, pieces, abs(ti), "sin")
        out[i] = complex(re, im)
    return NoiseCorrelation(tau, out)


def _closed_noise(medium, coupling, tau):
    """Closed-form C(tau) where one exists, else None."""
    if coupling.kind is CouplingKind.OHMIC_CUTOFF_EXP:
        W = coupling.cutoff
        return medium.hbar * coupling.beta / math.pi * W**2 / (1 + 1j * W * tau) ** 2
    return None


@dataclass(frozen=True)
class FdtReport:
    residual: float
    degenerate: bool
    omega: np.ndarray
    noise_spectrum: np.ndarray
    dissipation_spectrum: np.ndarray


def _half_line_transform(f, w, kind):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0, np.inf, weight=kind, wvar=w, limlst=200, epsabs=1e-14)
    return val, err


def fdt_residual(medium: MediumParams, coupling: CouplingSpec, noise_coupling: CouplingSpec | None = None,
                 omega_grid=None, full_output: bool = False):
    """Zero-temperature fluctuation-dissipation mismatch.

    J(w) is recovered from the memory kernel, J = (2/pi) int_0^inf gamma cos,
    and S(w) from the noise correlation, S = (1/pi) Re int_0^inf C e^{i w tau}.
    Returns max |S - (hbar w / 2) J| divided by the larger of max S and
    max (hbar w / 2) J; 0 (flagged degenerate) when both vanish.
    ``noise_coupling`` lets the noise come from a different spectrum.
    """
    ncpl = coupling if noise_coupling is None else noise_coupling
    _require_finite_noise(coupling)
    _require_finite_noise(ncpl)
    if omega_grid is None:
        top = max(c.support()[1] if math.isfinite(c.support()[1]) else 10 * max(c.cutoff, medium.omega0)
                  for c in (coupling, ncpl))
        omega_grid = np.linspace(top / 64, top, 64)
    w = np.asarray(omega_grid, dtype=float)
    if np.any(w <= 0):
        raise DomainError("omega grid must be positive")
    if coupling.is_zero and ncpl.is_zero:
        z = np.zeros(w.shape)
        rep = FdtReport(0.0, True, w, z, z)
        return rep if full_output else 0.0

    def gamma(tau):
        return float(kernel_values(medium, coupling, np.array([tau]), method="auto")[0])

    def corr(tau):
        c = _closed_noise(medium, ncpl, tau)
        if c is None:
            c = noise_correlation(medium, ncpl, [tau]).corr[0]
        return c

    S = np.empty(w.shape)
    D = np.empty(w.shape)
    worst = 0.0
    for i, wi in enumerate(w):
        if coupling.is_zero:
            D[i] = 0.0
        else:
            j, e1 = _half_line_transform(gamma, wi, "cos")
            D[i] = 0.5 * medium.hbar * wi * (2 / math.pi) * j
            worst = max(worst, e1 * medium.hbar * wi / math.pi)
        if ncpl.is_zero:
            S[i] = 0.0
        else:
            c_re, e2 = _half_line_transform(lambda x: corr(x).real, wi, "cos")
            c_im, e3 = _half_line_transform(lambda x: corr(x).imag, wi, "sin")
            S[i] = (c_re - c_im) / math.pi
            worst = max(worst, (e2 + e3) / math.pi)
    scale = max(np.max(np.abs(S)), np.max(np.abs(D)))
    if scale == 0:
        rep = FdtReport(0.0, True, w, S, D)
        return rep if full_output else 0.0
    if worst > 1e-7 * scale:
        raise ConvergenceError(f"spectra unresolved: quadrature error {worst:.3g} vs scale {scale:.3g}", [worst])
    res = float(np.max(np.abs(S - D)) / scale)
    rep = FdtReport(res, False, w, S, D)
    return rep if full_output else res
