"""Command-line scenario runner.

    dampol list [--json]
    dampol run CONFIG [--output-dir DIR] [--threads N] [--regen-golden] [--golden-dir DIR]

Exit status: 0 on success, 2 when the config or its inputs fail
validation, 3 when a numerical step fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULTS, EXPERIMENTS, ConfigError, ScenarioConfig, load_config
from .errors import DampolError
from .langevin import LangevinProblem, fdt_residual, integrate_mean
from .laplace import find_dispersion_poles
from .modes import (
    ModeIndex,
    ModeKernels,
    _peaks,
    bath_quadrature,
    commutator_series,
    evolve_coefficients,
    evolve_observables,
    long_time_amplitude,
)
from .radreact import reaction_field_mode, vacuum_field_mode
from .response import LaplaceResponse, _hilbert_real, format_float, kramers_kronig_residual, real_frequency_response

__all__ = ["main", "run_experiment", "write_table", "Table"]

OUTPUT_ENV = "DAMPOL_OUTPUT_DIR"
GOLDEN_ENV = "DAMPOL_GOLDEN_DIR"
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
# bath frequencies above this are handled by the mapped tail panels
BATH_TAIL = 200.0


class Table:
    """Column names plus rows of pre-formatted cells."""

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, *values):
        self.rows.append([v if isinstance(v, (int, np.integer)) and not isinstance(v, bool) else format_float(v)
                          for v in values])

    def extend(self, other: "Table"):
        self.rows.extend(other.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows([[str(c) for c in row] for row in self.rows])
        return buf.getvalue()

    def to_json_lines(self) -> str:
        lines = []
        for row in self.rows:
            rec = {c: (v if isinstance(v, (int, np.integer)) else float(v)) for c, v in zip(self.columns, row)}
            lines.append(json.dumps(rec))
        return "".join(line + "\n" for line in lines)


def write_table(table: Table, path: Path, fmt: str = "csv"):
    text = table.to_csv() if fmt == "csv" else table.to_json_lines()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# -- experiments ----------------------------------------------------------------
# each returns (table, summary dict); per-k work goes through ``pmap``


def _susceptibility(cfg, resp, pmap):
    rf = real_frequency_response(resp, cfg.omega_grid, cfg.setting("eta"))
    tab = Table(["omega", "chi_re", "chi_im"])
    for row in zip(rf.grid, rf.chi_re, rf.chi_im):
        tab.add(*row)
    return tab, {}


def _kk_check(cfg, resp, pmap):
    rf = real_frequency_response(resp, cfg.omega_grid, cfg.setting("eta"))
    residual = kramers_kronig_residual(rf, cfg.medium.omega0, cfg.setting("kk_min_points"))
    kk = _hilbert_real(rf.grid, rf.chi_im)
    tab = Table(["omega", "chi_re", "chi_im", "kk_re"])
    for row in zip(rf.grid, rf.chi_re, rf.chi_im, kk):
        tab.add(*row)
    return tab, {"kk_residual": residual}


def _dispersion(cfg, resp, pmap):
    tab = Table(["k", "re_s", "im_s", "re_residue", "im_residue", "multiplicity"])
    for ps in pmap(lambda k: find_dispersion_poles(resp, k), cfg.k_list):
        for p in ps:
            tab.add(ps.k, p.location.real, p.location.imag, p.residue.real, p.residue.imag, int(p.multiplicity))
    return tab, {}


def _bath_norm(series, kern, n_gl):
    """int (w / w_k) |c_b(w, t)|^2 dw, finite even where J(0) > 0."""
    if kern.resp.coupling.is_zero:
        return np.zeros(series.t.size)
    t_max = float(np.max(np.abs(series.t))) if series.t.size else 0.0
    w, q = bath_quadrature(t_max, _peaks(kern), kern.resp.coupling.support(), BATH_TAIL, n_gl)
    acc = np.zeros(series.t.size)
    for lo in range(0, w.size, 4096):
        sl = slice(lo, lo + 4096)
        acc += np.abs(series.bath(w[sl])) ** 2 @ (q[sl] * w[sl] / kern.omega_k)
    return acc


def _mode_evolution(cfg, resp, pmap):
    obs = cfg.setting("observable")
    stride = cfg.setting("output_stride")

    def one(k):
        mode = ModeIndex(k)
        ser = evolve_coefficients(resp, mode, obs, cfg.t_grid)
        kern = ser.kernels or ModeKernels(resp, mode, "forward")
        return k, ser, _bath_norm(ser, kern, cfg.setting("n_gl"))

    tab = Table(["k", "t", "c_a_re", "c_a_im", "c_d_re", "c_d_im", "bath_norm"])
    for k, ser, norm in pmap(one, cfg.k_list):
        for i in range(0, ser.t.size, stride):
            tab.add(k, ser.t[i], ser.c_a[i].real, ser.c_a[i].imag, ser.c_d[i].real, ser.c_d[i].imag, norm[i])
    return tab, {"observable": obs}


def _commutator(cfg, resp, pmap):
    def one(k):
        co = evolve_observables(resp, ModeIndex(k), cfg.t_grid, ("A", "pi_F"))
        vals, change = commutator_series(co["A"], co["pi_F"], cfg.setting("n_gl"), cfg.setting("quadrature_tol"))
        return k, co["A"].t, vals, change

    tab = Table(["k", "t", "ccr", "deviation"])
    worst, worst_change = 0.0, 0.0
    for k, t, vals, change in pmap(one, cfg.k_list):
        dev = np.abs(vals - 1.0)
        worst = max(worst, float(np.max(dev)))
        worst_change = max(worst_change, change)
        for row in zip(t, vals, dev):
            tab.add(k, *row)
    return tab, {"max_ccr_deviation": worst, "node_doubling_change": worst_change}


def _langevin(cfg, resp, pmap):
    t = cfg.t_grid
    drive = cfg.setting("drive_amplitude") * np.cos(cfg.setting("drive_frequency") * t)
    prob = LangevinProblem(cfg.medium, cfg.coupling, t, cfg.setting("y0"), cfg.setting("v0"), drive)
    traj = integrate_mean(prob)
    tab = Table(["t", "y", "v"])
    for i in range(0, t.size, cfg.setting("output_stride")):
        tab.add(traj.t[i], traj.y[i], traj.v[i])
    return tab, {}


def _long_time(cfg, resp, pmap):
    tab = Table(["k", "omega", "amp_re", "amp_im", "amp_abs"])
    for k, amp in pmap(lambda k: (k, long_time_amplitude(resp, ModeIndex(k), cfg.omega_grid)), cfg.k_list):
        for w, a in zip(cfg.omega_grid, amp):
            tab.add(k, w, a.real, a.imag, abs(a))
    return tab, {}


def _fdt(cfg, resp, pmap):
    rep = fdt_residual(cfg.medium, cfg.coupling, omega_grid=cfg.omega_grid, full_output=True)
    tab = Table(["omega", "noise_spectrum", "dissipation_spectrum"])
    for row in zip(rep.omega, rep.noise_spectrum, rep.dissipation_spectrum):
        tab.add(*row)
    return tab, {"fdt_residual": rep.residual}


def _radiation_reaction(cfg, resp, pmap):
    t_out = cfg.t_grid
    h = cfg.setting("history_step")
    t_end = float(np.max(t_out))
    n = max(2, int(math.ceil(t_end / h)) + 1)
    hist_t = np.linspace(0.0, t_end, n)

    def one(k):
        mode = ModeIndex(k)
        co = evolve_observables(resp, mode, hist_t, ("E", "Ydot"))
        total = evolve_coefficients(resp, mode, "E", t_out, kernels={"forward": co["E"].kernels}).c_a
        out = []
        for ti, tot in zip(t_out, total):
            vac = complex(vacuum_field_mode(mode, cfg.medium, ti).c_a)
            react = complex(reaction_field_mode(mode, (hist_t, co["Ydot"].c_a), cfg.medium, ti))
            out.append((ti, tot, vac, react, abs(tot - vac - react) / abs(vac)))
        return k, out

    tab = Table(["k", "t", "total_re", "total_im", "vacuum_re", "vacuum_im", "reaction_re", "reaction_im",
                 "split_error"])
    worst = 0.0
    for k, rows in pmap(one, cfg.k_list):
        for ti, tot, vac, react, err in rows:
            worst = max(worst, err)
            tab.add(k, ti, tot.real, tot.imag, vac.real, vac.imag, react.real, react.imag, err)
    return tab, {"max_split_error": worst}


_RUNNERS = {
    "susceptibility": _susceptibility,
    "kk_check": _kk_check,
    "dispersion": _dispersion,
    "mode_evolution": _mode_evolution,
    "commutator": _commutator,
    "langevin": _langevin,
    "long_time": _long_time,
    "fdt": _fdt,
    "radiation_reaction": _radiation_reaction,
}
assert set(_RUNNERS) == set(EXPERIMENTS)


def run_experiment(cfg: ScenarioConfig, threads: int = 1):
    """Execute one scenario; returns (table, summary).

    Independent k entries may run on ``threads`` workers; results are
    gathered in k_list order so the output does not depend on scheduling.
    """
    resp = LaplaceResponse(cfg.medium, cfg.coupling)
    if threads > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        pmap = lambda f, xs: list(pool.map(f, xs))
    else:
        pool = None
        pmap = lambda f, xs: [f(x) for x in xs]
    try:
        return _RUNNERS[cfg.experiment](cfg, resp, pmap)
    finally:
        if pool is not None:
            pool.shutdown()


# -- entry point ------------------------------------------------------------------


def _list(as_json: bool, out):
    if as_json:
        out.write(json.dumps([{"name": k, "description": v} for k, v in EXPERIMENTS.items()], indent=2) + "\n")
    else:
        for name, desc in EXPERIMENTS.items():
            out.write(f"{name}: {desc}\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _run(args, out, err) -> int:
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        err.write(f"dampol: invalid config {args.config}: {exc}\n")
        return EXIT_INVALID
    if args.threads < 1:
        err.write("dampol: --threads must be at least 1\n")
        return EXIT_INVALID
    out_dir = Path(args.output_dir or cfg.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    t_parse = time.perf_counter()
    try:
        table, summary = run_experiment(cfg, args.threads)
    except ValueError as exc:
        # domain violations surfaced by the library (bad grid, step too large, ...)
        err.write(f"dampol: invalid input for {cfg.experiment}: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    except (DampolError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        err.write(f"dampol: numerical failure in {cfg.experiment}: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL
    t_run = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "csv" if cfg.output_format == "csv" else "jsonl"
    primary = write_table(table, out_dir / f"{cfg.experiment}.{ext}", cfg.output_format)
    if args.regen_golden:
        gdir = Path(args.golden_dir or os.environ.get(GOLDEN_ENV) or "tests/golden")
        gdir.mkdir(parents=True, exist_ok=True)
        write_table(table, gdir / f"{cfg.experiment}.csv", "csv")
    meta = {
        "experiment": cfg.experiment,
        "config_path": str(args.config),
        "config": cfg.source,
        "defaults": DEFAULTS,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "threads": args.threads,
        "rows": len(table.rows),
        "summary": summary,
        "timings_s": {"parse": t_parse - t0, "run": t_run - t_parse, "total": time.perf_counter() - t0},
    }
    with open(out_dir / f"{cfg.experiment}.meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    for key, value in summary.items():
        shown = format_float(value) if isinstance(value, float) else value
        out.write(f"{key} {shown}\n")
    out.write(f"wrote {primary}\n")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dampol", description="Damped-polarization field quantization scenarios.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    lp = sub.add_parser("list", help="list experiments")
    lp.add_argument("--json", action="store_true", help="emit a JSON array")
    rp = sub.add_parser("run", help="run a scenario config")
    rp.add_argument("config")
    rp.add_argument("--output-dir", help=f"output directory (default: config, then ${OUTPUT_ENV}, then .)")
    rp.add_argument("--threads", type=int, default=1, help="workers for independent k entries")
    rp.add_argument("--regen-golden", action="store_true", help="also overwrite the golden reference CSV")
    rp.add_argument("--golden-dir", help=f"golden directory (default: ${GOLDEN_ENV}, then tests/golden)")
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    if args.command == "list":
        _list(args.json, out)
        return EXIT_OK
    return _run(args, out, err)


if __name__ == "__main__":
    sys.exit(main())
