"""Finite harmonic-bath model of one mode, propagated exactly.

The reservoir continuum is replaced by ``n_bath`` oscillators at
Gauss-Legendre frequencies on [0, omega_max].  The resulting quadratic
Hamiltonian H = x^T H x / 2 over x = (A, Y, Q_1..Q_n, pi_F, pi_Y, P_1..P_n)
is propagated by diagonalising the antisymmetric matrix H^{1/2} J H^{1/2},
which is exact for any t (positive or negative).
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg

from .errors import DomainError
from .medium import CouplingSpec, MediumParams, tail_mass
from .modes import MODE_VOLUME_FACTOR, ModeIndex

__all__ = ["DiscretizedBathSystem"]


class DiscretizedBathSystem:
    """One field mode coupled to a discretised reservoir.

    Parameters
    ----------
    params, coupling : medium constants and reservoir spectrum.
    mode : ModeIndex or None
        With ``None`` only the polarization and the bath are kept (the
        matter-plus-bath system behind the Langevin equation).
    n_bath : int
        Number of bath oscillators.
    omega_max : float
        Upper end of the discretised band.  The modes above it are
        represented by the static mass they add to the polarization,
        int_{omega_max}^inf J / w^2 dw.
    """

    def __init__(self, params: MediumParams, coupling: CouplingSpec, mode: ModeIndex | None = None,
                 n_bath: int = 400, omega_max: float = 20.0, mass_counterterm: bool = True):
        if n_bath < 1:
            raise DomainError("n_bath must be positive")
        self.params, self.coupling, self.mode = params, coupling, mode
        self.n_bath = n_bath
        x, w = np.polynomial.legendre.leggauss(n_bath)
        self.bath_freqs = 0.5 * omega_max * (x + 1)
        self.bath_weights = 0.5 * omega_max * w
        J = coupling.spectral_density(self.bath_freqs, params)
        self.g = np.sqrt(self.bath_weights * J / self.bath_freqs)
        self.mass = params.rho + (tail_mass(params, coupling, omega_max) if mass_counterterm else 0.0)
        self.with_field = mode is not None
        self.system_matrix = self._hamiltonian()
        self._prepare()

    # index layout
    @property
    def n_q(self):
        return self.n_bath + (2 if self.with_field else 1)

    def index(self, name):
        nq = self.n_q
        f = 1 if self.with_field else 0
        table = {"Y": f, "pi_Y": nq + f}
        if self.with_field:
            table.update({"A": 0, "pi_F": nq})
        return table[name]

    def _hamiltonian(self):
        p, nq = self.params, self.n_q
        H = np.zeros((2 * nq, 2 * nq))
        iY, iPY = self.index("Y"), self.index("pi_Y")
        q0 = iY + 1
        u = np.zeros(2 * nq)
        u[iPY] = 1.0
        u[q0 : q0 + self.n_bath] = -self.g
        if self.with_field:
            k = self.mode.k
            H[self.index("pi_F"), self.index("pi_F")] = 1.0 / p.eps0
            H[self.index("A"), self.index("A")] = k**2 / p.mu0
            u[self.index("A")] = -p.alpha
        H += np.outer(u, u) / self.mass
        H[iY, iY] += p.rho * p.omega0**2
        idx = np.arange(self.n_bath)
        H[q0 + idx, q0 + idx] += self.bath_freqs
        H[nq + q0 + idx, nq + q0 + idx] += self.bath_freqs
        return H

    def _prepare(self):
        H = self.system_matrix
        nq = self.n_q
        Jm = np.zeros_like(H)
        Jm[:nq, nq:] = np.eye(nq)
        Jm[nq:, :nq] = -np.eye(nq)
        self.generator = Jm @ H
        evals, evecs = linalg.eigh(H)
        if evals.min() <= 0:
            raise DomainError("Hamiltonian is not positive definite")
        self._hs = (evecs * np.sqrt(evals)) @ evecs.T
        self._hs_inv = (evecs / np.sqrt(evals)) @ evecs.T
        K = self._hs @ Jm @ self._hs
        lam, U = linalg.eigh(1j * K)
        self._lam, self._U = lam, U

    def propagator(self, t: float) -> np.ndarray:
        """Real matrix G(t) with x(t) = G(t) x(0)."""
        U = self._U
        phase = np.exp(-1j * self._lam * t)
        G = self._hs_inv @ ((U * phase) @ U.conj().T) @ self._hs
        return G.real

    def symplectic_defect(self, t: float) -> float:
        """max |G^T Jm G - Jm| (zero for exact Hamiltonian flow)."""
        G = self.propagator(t)
        nq = self.n_q
        Jm = np.zeros_like(G)
        Jm[:nq, nq:] = np.eye(nq)
        Jm[nq:, :nq] = -np.eye(nq)
        return float(np.max(np.abs(G.T @ Jm @ G - Jm)))

    def _sigma(self):
        """Ladder-operator amplitudes of every canonical coordinate."""
        p = self.params
        V = MODE_VOLUME_FACTOR
        nq = self.n_q
        sq = np.full(nq, V * math.sqrt(p.hbar / 2))
        sp = np.full(nq, V * math.sqrt(p.hbar / 2))
        if self.with_field:
            wk = self.mode.omega(p)
            sA = math.sqrt(p.hbar / (2 * p.eps0 * wk))
            sq[0] = V * sA
            sp[0] = V * p.eps0 * wk * sA
        return sq, sp

    def coefficients(self, observable: str, t: float):
        """(c_a, c_d, c_b) of an observable at time t.

        ``c_b[i]`` multiplies the discrete b_i(0); it approximates
        sqrt(w_i) times the continuum coefficient at w = bath_freqs[i].
        Supported observables: A, pi_F, E, Y, pi_Y, Ydot.
        """
        G = self.propagator(t)
        sq, sp = self._sigma()
        nq = self.n_q
        row = self._row(observable, G)
        coef = row[:nq] * sq - 1j * row[nq:] * sp
        f = 1 if self.with_field else 0
        c_a = coef[0] if self.with_field else 0.0
        c_d = coef[f]
        c_b = coef[f + 1 :]
        return c_a, c_d, c_b

    def _row(self, observable, G):
        p = self.params
        if observable in ("A", "pi_F", "Y", "pi_Y"):
            return G[self.index(observable)]
        if observable == "E":
            return -G[self.index("pi_F")] / p.eps0
        if observable == "Ydot":
            # Ydot = dH/dpi_Y
            return self.system_matrix[self.index("pi_Y")] @ G
        raise DomainError(f"unknown observable {observable!r}")

    def mean_trajectory(self, y0: float, v0: float, t_grid):
        """Expectation of Y(t) and Ydot(t) from Y = y0, Ydot = v0, bath at rest."""
        nq = self.n_q
        x0 = np.zeros(2 * nq)
        x0[self.index("Y")] = y0
        x0[self.index("pi_Y")] = self.mass * v0
        ys, vs = [], []
        for t in np.asarray(t_grid, dtype=float):
            x = self.propagator(t) @ x0
            ys.append(x[self.index("Y")])
            vs.append(self.system_matrix[self.index("pi_Y")] @ x)
        return np.array(ys), np.array(vs)
