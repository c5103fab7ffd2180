"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import io
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

sys.path.insert(0, str(Path(__file__).resolve().parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from dampol.bath import DiscretizedBathSystem
from dampol.cli import main as cli_main
from dampol.langevin import LangevinProblem, fdt_residual, integrate_mean
from dampol.laplace import TransferFunction, invert_by_residues, invert_numerical
from dampol.medium import CouplingSpec, MediumParams, kernel_laplace
from dampol.modes import (
    OBSERVABLES,
    ModeIndex,
    ModeKernels,
    commutator_series,
    energy_report,
    evolve_coefficients,
    evolve_observables,
    find_dispersion_poles,
    long_time_amplitude,
)
from dampol.radreact import reaction_field_mode, vacuum_field_mode
from dampol.response import LaplaceResponse, kramers_kronig_residual, real_frequency_response

ROOT = Path(__file__).resolve().parent.parent
MEDIUM = MediumParams()
OHMIC = CouplingSpec.ohmic(0.1)
CANON = LaplaceResponse(MEDIUM, OHMIC)
EXPERIMENT_NAMES = ("susceptibility", "kk_check", "dispersion", "mode_evolution", "commutator", "langevin",
                    "long_time", "fdt", "radiation_reaction")


def report(n, title, passed, detail):
    line = f"criterion {n:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return passed


def criterion_1():
    rng = np.random.default_rng(1)
    s = rng.uniform(1e-3, 10.0, 100) + 1j * rng.uniform(-10.0, 10.0, 100)
    dev = max(abs(kernel_laplace(MEDIUM, OHMIC, z) - 0.1) for z in s)
    h = 1e-3
    t = np.arange(0, 50 + h / 2, h)
    tr = integrate_mean(LangevinProblem(MEDIUM, OHMIC, t, 1.0, 0.0))
    g = 0.05
    wt = np.sqrt(1 - g * g)
    exact = np.exp(-g * t) * (np.cos(wt * t) + g / wt * np.sin(wt * t))
    err = float(np.max(np.abs(tr.y - exact)))
    ok = dev < 1e-10 and err < 1e-6
    return report(1, "Ohmic reduction", ok,
                  f"max|gamma~-beta|={dev:.2e} (tol 1e-10); damped-oscillator max err={err:.2e} (tol 1e-6, h=1e-3)")


def criterion_2():
    res = [kramers_kronig_residual(real_frequency_response(CANON, np.geomspace(1e-2, 1e3, n))) for n in (2048, 4096)]
    ratio = res[1] / res[0]
    ok = res[0] < 1e-2 and 0.4 <= ratio <= 0.6
    return report(2, "Kramers-Kronig", ok,
                  f"residual(2048)={res[0]:.3e} (tol 1e-2); residual(4096)/residual(2048)={ratio:.3f} (0.5 +-20%)")


def criterion_3():
    t = np.array([0.1, 0.3, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0])
    worst, count = 0.0, 0
    for beta in (0.01, 0.1):
        resp = LaplaceResponse(MEDIUM, CouplingSpec.ohmic(beta))
        for k in (0.5, 1.0, 2.0):
            kern = ModeKernels(resp, ModeIndex(k))
            kernels = [kern.transfer(tag, op) for tag in OBSERVABLES for op in ("a", "d")]
            for tag in ("A", "Y"):
                B = kern.transfer(tag, "b")
                # full bath kernel B(s) / (s + i w) at a sample bath frequency
                kernels.append(TransferFunction.rational(B.numer, B.denom * Polynomial([1.3j, 1.0])))
            for F in kernels:
                g = invert_by_residues(F, None, t)
                scale = np.max(np.abs(invert_by_residues(F, None, np.linspace(0.1, 50, 500))))
                if scale == 0:
                    continue
                num = np.array([invert_numerical(F, ti) for ti in t])
                worst = max(worst, float(np.max(np.abs(g - num)) / scale))
                count += 1
    return report(3, "inversion oracle agreement", worst < 1e-6,
                  f"max relative residue-vs-Talbot difference={worst:.2e} over {count} kernels (tol 1e-6)")


def criterion_4():
    t = np.linspace(0, 50, 201)
    worst, change = 0.0, 0.0
    cases = [(k, b) for b in (0.01, 0.1) for k in (0.5, 1.0, 2.0)]
    for k, beta in cases:
        co = evolve_observables(LaplaceResponse(MEDIUM, CouplingSpec.ohmic(beta)), ModeIndex(k), t, ("A", "pi_F"))
        vals, ch = commutator_series(co["A"], co["pi_F"])
        worst = max(worst, float(np.max(np.abs(vals - 1))))
        change = max(change, ch)
    ok = worst < 1e-5 and change < 1e-4
    return report(4, "CCR preservation", ok,
                  f"max|[A,pi_F]/(i hbar delta)-1|={worst:.2e} (tol 1e-5) over {len(cases)} modes, "
                  f"node-doubling change={change:.2e} (tol 1e-4)")


def _bath_mismatch(system, times):
    co = evolve_observables(CANON, ModeIndex(1.0), times, omega=system.bath_freqs)
    worst = 0.0
    for i, ti in enumerate(times):
        for tag in OBSERVABLES:
            ca, cd, cb = system.coefficients(tag, ti)
            ref = np.concatenate(([ca, cd], cb))
            got = np.concatenate(([co[tag].c_a[i], co[tag].c_d[i]], co[tag].c_b[i] * np.sqrt(system.bath_weights)))
            worst = max(worst, float(np.max(np.abs(ref - got)) / np.max(np.abs(ref))))
    return worst


def criterion_5():
    system = DiscretizedBathSystem(MEDIUM, OHMIC, ModeIndex(1.0), 400, 20.0)
    err = _bath_mismatch(system, [10.0])
    sweep = _bath_mismatch(system, [1.0, 5.0, 20.0, 50.0])
    return report(5, "brute-force bath equivalence", err < 1e-4,
                  f"max relative difference at t=10, all observables={err:.2e} (tol 1e-4); "
                  f"informational sweep t in {{1,5,20,50}}: {sweep:.2e} (band truncation at 20 w0)")


def criterion_6():
    mode = ModeIndex(1.0)
    rate = abs(find_dispersion_poles(CANON, 1.0).max_real())
    T = 200 / rate
    worst = 0.0
    for tag in ("A", "pi_F", "E", "Y", "Ydot"):
        ser = evolve_coefficients(CANON, mode, tag, [0.0, T])
        init = max(abs(ser.c_a[0]), abs(ser.c_d[0]))
        worst = max(worst, max(abs(ser.c_a[1]), abs(ser.c_d[1])) / init)
    # canonical pi_Y keeps the static reservoir offset pi_Y(0) - rho w0^2 Y~(s=0)
    ser = evolve_coefficients(CANON, mode, "pi_Y", [0.0, T])
    offset = ser.c_d[0] - MEDIUM.rho * MEDIUM.omega0**2 * ModeKernels(CANON, mode).transfer("Y", "d")(1e-14)
    pi_y = abs(ser.c_d[1] - offset) / abs(ser.c_d[0]) + abs(ser.c_a[1]) / abs(ser.c_d[0])
    w = np.linspace(0.1, 5.0, 50)
    ser = evolve_coefficients(CANON, mode, "A", [T], omega=w)
    amp = long_time_amplitude(CANON, mode, w)
    lt = float(np.max(np.abs(ser.c_b[0] - amp * np.exp(-1j * w * T)) / np.abs(amp)))
    ok = worst < 1e-4 and pi_y < 1e-4 and lt < 1e-4
    return report(6, "long-time limit", ok,
                  f"transients of A, pi_F, E, Y, Ydot at t=200/|Re p|={T:.4g}: {worst:.2e} of initial (tol 1e-4); "
                  f"pi_Y vs its static reservoir offset: {pi_y:.2e} (tol 1e-4); "
                  f"surviving b-coefficient vs closed form={lt:.2e} (tol 1e-4)")


def criterion_7():
    mode = ModeIndex(1.0)
    t = np.linspace(0, 50, 5001)
    rep = energy_report(evolve_observables(CANON, mode, t), CANON, mode)
    field, bath = rep.field[:-1], rep.bath[:-1]
    drift = float(np.max(np.abs(rep.total - rep.total[0])) / rep.total[0])
    win = 500  # 5 time units
    f = field.reshape(-1, win).mean(axis=1)
    b = bath.reshape(-1, win).mean(axis=1)
    trend = bool(np.all(np.diff(f) < 0) and np.all(np.diff(b) > 0))
    ok = drift < 1e-6 and trend
    return report(7, "energy bookkeeping", ok,
                  f"relative total drift={drift:.2e} (tol 1e-6); window-mean E_field decreasing and "
                  f"E_bath increasing: {trend} (E_field {rep.field[0]:.3f} -> {rep.field[-1]:.3f}, "
                  f"E_bath {rep.bath[0]:.3f} -> {rep.bath[-1]:.3f})")


def criterion_8():
    res = {b: fdt_residual(MEDIUM, CouplingSpec.ohmic_exp(b, 20.0)) for b in (0.01, 0.1, 1.0)}
    worst = max(res.values())
    return report(8, "fluctuation-dissipation", worst < 1e-6,
                  "residuals " + ", ".join(f"beta={b}: {r:.2e}" for b, r in res.items()) + " (tol 1e-6)")


def criterion_9():
    hist = np.linspace(0, 50, 50001)
    worst = 0.0
    for k in (0.5, 1.0, 2.0):
        mode = ModeIndex(k)
        co = evolve_observables(CANON, mode, hist, ("E", "Ydot"))
        for T in (0.5, 3.0, 10.0, 25.0, 50.0):
            i = int(round(T * 1000))
            vac = vacuum_field_mode(mode, MEDIUM, T).c_a
            for op, v in (("c_a", vac), ("c_d", 0.0)):
                react = reaction_field_mode(mode, (hist, getattr(co["Ydot"], op)), MEDIUM, T)
                worst = max(worst, abs(getattr(co["E"], op)[i] - v - react) / abs(vac))
    return report(9, "radiation-reaction split", worst < 1e-5,
                  f"max |E - E_vac - E_react| / |E_vac|={worst:.2e} over k in {{0.5,1,2}} (tol 1e-5)")


def criterion_10():
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in EXPERIMENT_NAMES:
            code = cli_main(["run", str(ROOT / "configs" / f"{name}.yaml"), "--output-dir", tmp],
                            io.StringIO(), io.StringIO())
            produced = Path(tmp) / f"{name}.csv"
            golden = ROOT / "tests" / "golden" / f"{name}.csv"
            if code != 0 or not golden.exists() or produced.read_bytes() != golden.read_bytes():
                mismatched.append(name)
    ok = not mismatched
    return report(10, "determinism", ok,
                  f"{len(EXPERIMENT_NAMES) - len(mismatched)}/{len(EXPERIMENT_NAMES)} CLI outputs byte-identical "
                  "to golden files" + (f"; mismatched: {', '.join(mismatched)}" if mismatched else ""))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10]


def test_criterion_01_ohmic_reduction():
    assert criterion_1()


def test_criterion_02_kramers_kronig():
    assert criterion_2()


def test_criterion_03_inversion_oracles():
    assert criterion_3()


def test_criterion_04_ccr_preservation():
    assert criterion_4()


def test_criterion_05_bath_equivalence():
    assert criterion_5()


def test_criterion_06_long_time_limit():
    assert criterion_6()


def test_criterion_07_energy_bookkeeping():
    assert criterion_7()


def test_criterion_08_fluctuation_dissipation():
    assert criterion_8()


def test_criterion_09_radiation_reaction_split():
    assert criterion_9()


def test_criterion_10_golden_determinism():
    assert criterion_10()


if __name__ == "__main__":
    start = time.perf_counter()
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed in {time.perf_counter() - start:.1f} s")
    sys.exit(0 if all(results) else 1)
