import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from dampol.errors import ActiveMediumError, ConvergenceError, DivergenceError, DomainError
from dampol.laplace import (
    TransferFunction,
    find_dispersion_poles,
    invert_by_residues,
    invert_numerical,
    polynomial_roots,
    rational_poles,
    root_modulus_bound,
)
from dampol.medium import CouplingSpec, MediumParams
from dampol.response import LaplaceResponse

CANON = LaplaceResponse(MediumParams(), CouplingSpec.ohmic(0.1))


def _sorted(z):
    return sorted(z, key=lambda x: (round(x.imag, 8), round(x.real, 8)))


def test_k0_dispersion_poles():
    ps = find_dispersion_poles(CANON, 0.0)
    by_mult = {p.multiplicity: p for p in ps}
    assert by_mult[2].location == pytest.approx(0.0, abs=1e-12)
    assert by_mult[2].residue == pytest.approx(0.025, rel=1e-9)
    simple = _sorted([p.location for p in ps if p.multiplicity == 1])
    # s^2 + 0.1 s + 2 = 0
    q = math.sqrt(2 - 0.0025)
    assert simple[0] == pytest.approx(complex(-0.05, -q), rel=1e-12)
    assert simple[1] == pytest.approx(complex(-0.05, q), rel=1e-12)
    assert q == pytest.approx(1.41332940251, rel=1e-11)


def test_k1_dispersion_poles_match_quartic():
    ps = find_dispersion_poles(CANON, 1.0)
    assert ps.total_multiplicity == 4
    oracle = np.roots([1, 0.1, 3, 0.1, 1])
    got = _sorted(ps.locations)
    np.testing.assert_allclose(got, _sorted(oracle), rtol=1e-12)
    upper = sorted([z for z in got if z.imag > 0], key=lambda z: z.imag)
    assert upper[0] == pytest.approx(-0.0138286151 + 0.6181560618j, abs=1e-10)
    assert upper[1] == pytest.approx(-0.0361713849 + 1.6169052795j, abs=1e-10)
    assert all(z.real < 0 for z in got)


@pytest.mark.parametrize("k", [0.3, 1.0, 4.0])
def test_vacuum_dispersion(k):
    r = LaplaceResponse(MediumParams(alpha=0.0), CouplingSpec.ohmic(0.0))
    locs = _sorted(find_dispersion_poles(r, k).locations)
    # photon pair only carries weight; all poles on the imaginary axis
    assert all(abs(z.real) < 1e-12 for z in locs)
    assert any(abs(z - 1j * k) < 1e-12 for z in locs)
    assert any(abs(z + 1j * k) < 1e-12 for z in locs)


def test_dispersion_residues_sum():
    # residues of 1/D: sum over poles vanishes when deg D - deg N >= 2
    ps = find_dispersion_poles(CANON, 1.0)
    assert abs(sum(p.residue for p in ps)) < 1e-12


def test_active_medium_detected():
    # gain media cannot be built from valid specs; a negative threshold flags every pole instead
    resp = LaplaceResponse(MediumParams(), CouplingSpec.lorentzian(0.1, 3.0))
    with pytest.raises(ActiveMediumError):
        find_dispersion_poles(resp, 1.0, active_tol=-1.0)


def test_general_dispersion_needs_continuation():
    r = LaplaceResponse(MediumParams(), CouplingSpec.ohmic_exp(0.1, 20.0))
    with pytest.raises(ConvergenceError) as exc:
        find_dispersion_poles(r, 1.0, seeds_per_axis=8)
    assert exc.value.unconverged


def test_multiple_root_grouping():
    p = Polynomial.fromroots([-1, -1, -1, 2j, -2j])
    roots = dict(polynomial_roots(p))
    assert roots[min(roots, key=lambda z: abs(z + 1))] == 3


def test_textbook_pairs():
    one = Polynomial([1.0])
    assert invert_by_residues(TransferFunction.rational(one, [1, 0, 1]), None, math.pi / 2) == pytest.approx(1.0)
    F = TransferFunction.rational(one, Polynomial.fromroots([-1, -1]))
    assert invert_by_residues(F, None, 2.0).real == pytest.approx(0.2706705664732254, rel=1e-14)
    assert invert_numerical(TransferFunction.rational(one, [0, 1]), 3.0) == pytest.approx(1.0, rel=1e-12)
    assert invert_numerical(TransferFunction.rational(one, [1, 1]), 1.0) == pytest.approx(math.exp(-1), rel=1e-12)


def test_damped_pair_oracles_agree():
    F = TransferFunction.rational([1.0], [2, 0.1, 1])
    a = invert_by_residues(F, None, 5.0)
    b = invert_numerical(F, 5.0)
    assert a.real == pytest.approx(0.3888887358556687, rel=1e-13)
    assert abs(a - b) < 1e-8


def test_general_function_uses_bromwich():
    F = TransferFunction.general(lambda s: 1 / (s + 1) ** 2)
    assert invert_numerical(F, 2.0).real == pytest.approx(2 * math.exp(-2), rel=1e-6)


def test_improper_rejected():
    with pytest.raises(DomainError):
        TransferFunction.rational([0, 0, 1], [1, 1])


def test_pole_count_mismatch_rejected():
    F = TransferFunction.rational([1.0], Polynomial.fromroots([-1, -2]))
    short = rational_poles(TransferFunction.rational([1.0], [1, 1]))
    with pytest.raises(DomainError):
        invert_by_residues(F, short, 1.0)


def test_growing_pole_overflow_guard():
    F = TransferFunction.rational([1.0], [-1, 1])  # pole at s = +1
    assert invert_by_residues(F, None, 1.0).real == pytest.approx(math.e)
    with pytest.raises(DivergenceError):
        invert_by_residues(F, None, 1000.0)


def test_negative_time_rejected():
    F = TransferFunction.rational([1.0], [1, 1])
    with pytest.raises(DomainError):
        invert_by_residues(F, None, -1.0)
    with pytest.raises(DomainError):
        invert_numerical(F, 0.0)


def test_forward_backward_even_signal():
    # g(t) = e^{-|t|}: forward and backward transforms are both 1/(s+1)
    F = TransferFunction.rational([1.0], [1, 1])
    t = np.linspace(0, 5, 11)
    np.testing.assert_allclose(invert_by_residues(F, None, t, "forward"), invert_by_residues(F, None, t, "backward"))


def _random_stable_rational(rng):
    n = int(rng.integers(2, 7))
    roots = []
    while len(roots) < n:
        re = -rng.uniform(0.01, 2.0)
        if n - len(roots) >= 2 and rng.random() < 0.7:
            im = rng.uniform(0.1, 3.0)
            roots += [complex(re, im), complex(re, -im)]
        else:
            roots.append(complex(re, 0.0))
    den = Polynomial.fromroots(roots)
    num = Polynomial(rng.normal(size=int(rng.integers(1, n + 1))))
    return TransferFunction.rational(Polynomial(num.coef.real), Polynomial(den.coef.real))


def test_oracle_agreement_random_rationals(rng):
    t = np.array([0.1, 1.0, 7.0, 20.0, 50.0])
    worst = 0.0
    for _ in range(100):
        F = _random_stable_rational(rng)
        g = invert_by_residues(F, None, t)
        scale = np.max(np.abs(invert_by_residues(F, None, np.linspace(0.1, 50, 400))))
        h = np.array([invert_numerical(F, ti) for ti in t])
        worst = max(worst, np.max(np.abs(g - h)) / scale)
    assert worst < 1e-6


def test_initial_value_theorem(rng):
    for _ in range(10):
        F = _random_stable_rational(rng)
        s_big = 1e7
        g0 = invert_by_residues(F, None, 0.0)
        assert abs(s_big * F(s_big) - g0) <= 1e-4 * max(1.0, abs(g0))


def test_linearity(rng):
    F1, F2 = _random_stable_rational(rng), _random_stable_rational(rng)
    t = np.linspace(0.1, 10, 7)
    a, b = 0.7, -2.5
    lhs = invert_by_residues(F1.scale(a) + F2.scale(b), None, t)
    rhs = a * invert_by_residues(F1, None, t) + b * invert_by_residues(F2, None, t)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=8))
def test_root_modulus_bound_encloses_roots(pts):
    roots = [complex(a, b) for a, b in pts]
    p = Polynomial.fromroots(roots)
    bound = root_modulus_bound(p)
    top = max(abs(z) for z in roots)
    # coefficients below 1e-300 are trimmed to zero, so roots that small are invisible
    assert bound >= top * (1 - 1e-9) or top < 1e-290
    assert bound <= 2 ** (1 / 8) * 2 * max(top, 1e-3) + 1e-9 or top < 1e-3
