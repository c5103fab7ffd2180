import io
import json
from pathlib import Path

import numpy as np
import pytest

from dampol.cli import main
from dampol.config import DEFAULTS, EXPERIMENTS, ConfigError, load_config, parse_config
from dampol.medium import CouplingKind, CouplingSpec, MediumParams
from dampol.response import LaplaceResponse, real_frequency_response

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = """\
medium:
  rho: 1.0
  omega0: 1.0
  alpha: 1.0
coupling:
  kind: Ohmic
  beta: 0.1
"""


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- list ------------------------------------------------------------------


def test_list_plain():
    code, out, _ = run(["list"])
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 9
    assert [l.split(":")[0] for l in lines] == list(EXPERIMENTS)


def test_list_json_matches_plain():
    _, plain, _ = run(["list"])
    code, js, _ = run(["list", "--json"])
    assert code == 0
    arr = json.loads(js)
    assert [f"{d['name']}: {d['description']}" for d in arr] == plain.splitlines()


def test_list_is_stable():
    assert run(["list"])[1] == run(["list"])[1]
    assert "\x1b" not in run(["list"])[1]


# -- validation ------------------------------------------------------------


def test_empty_k_list_rejected(tmp_path):
    cfg = write(tmp_path, BASE + "experiment: dispersion\ngrids:\n  k_list: []\n")
    code, _, err = run(["run", cfg, "--output-dir", str(tmp_path)])
    assert code == 2
    assert "k_list" in err


def test_missing_grid_rejected(tmp_path):
    cfg = write(tmp_path, BASE + "experiment: mode_evolution\ngrids:\n  k_list: [1.0]\n")
    code, _, err = run(["run", cfg])
    assert code == 2 and "t_grid" in err and "line 9" in err


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError) as exc:
        parse_config(BASE.replace("  alpha: 1.0\n", "  alpha: 1.0\n  alhpa: 2\n") + "experiment: fdt\n")
    assert exc.value.line == 5
    assert "alhpa" in str(exc.value)


def test_unknown_section_and_experiment():
    with pytest.raises(ConfigError) as exc:
        parse_config(BASE + "experiment: fdt\nplots: {}\n")
    assert exc.value.line == 9
    with pytest.raises(ConfigError) as exc:
        parse_config(BASE + "experiment: spectra\n")
    assert exc.value.line == 8


def test_type_errors():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("rho: 1.0", "rho: heavy") + "experiment: fdt\n")
    with pytest.raises(ConfigError):
        parse_config(BASE + "experiment: langevin\ngrids:\n  t_grid: {start: 0, stop: 1, num: 2.5}\n")
    with pytest.raises(ConfigError):
        parse_config(BASE + "experiment: langevin\ngrids:\n  t_grid: {start: 0, stop: 1}\n")
    with pytest.raises(ConfigError):
        parse_config(BASE + "experiment: fdt\noutput:\n  format: xlsx\n")
    with pytest.raises(ConfigError):
        parse_config(BASE + "experiment: fdt\nsettings:\n  observable: Q\n")


def test_physics_errors_become_config_errors():
    with pytest.raises(ConfigError) as exc:
        parse_config(BASE.replace("rho: 1.0", "rho: -1.0") + "experiment: fdt\n")
    assert "rho" in str(exc.value)
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("kind: Ohmic", "kind: OhmicCutoffExp") + "experiment: fdt\n")


def test_malformed_yaml():
    with pytest.raises(ConfigError) as exc:
        parse_config("medium: [1, 2\n")
    assert exc.value.line is not None


def test_missing_file(tmp_path):
    code, _, err = run(["run", str(tmp_path / "nope.yaml")])
    assert code == 2 and "nope.yaml" in err


def test_bad_threads(tmp_path):
    code, _, _ = run(["run", str(CONFIGS / "dispersion.yaml"), "--threads", "0", "--output-dir", str(tmp_path)])
    assert code == 2


def test_unknown_command():
    assert run(["frobnicate"])[0] == 2


def test_grid_forms():
    cfg = parse_config(BASE + "experiment: susceptibility\ngrids:\n  omega_grid: {start: 0.1, stop: 10, num: 3, spacing: log}\n")
    np.testing.assert_allclose(cfg.omega_grid, [0.1, 1.0, 10.0])
    cfg = parse_config(BASE + "experiment: susceptibility\ngrids:\n  omega_grid: [0.5, 1, 2]\n")
    np.testing.assert_array_equal(cfg.omega_grid, [0.5, 1.0, 2.0])


def test_defaults_and_overrides():
    cfg = parse_config(BASE + "experiment: fdt\ngrids:\n  omega_grid: [1]\nsettings:\n  eta: 1.0e-6\n")
    assert cfg.setting("eta") == 1e-6
    assert cfg.setting("n_gl") == DEFAULTS["n_gl"]
    assert cfg.n_bath == 400 and cfg.bath_cutoff == 20.0


def test_tabulated_and_si_configs():
    table = "\n".join(f"    - [{w}, {0.1 / w**3}]" for w in np.linspace(0.5, 5, 10))
    cfg = parse_config(BASE.replace("kind: Ohmic\n  beta: 0.1", "kind: Tabulated\n  table:\n" + table) + "experiment: dispersion\ngrids:\n  k_list: [1]\n")
    assert cfg.coupling.kind is CouplingKind.TABULATED
    si = BASE.replace("rho: 1.0", "rho: 2.0").replace("omega0: 1.0", "omega0: 3.0e15").replace(
        "alpha: 1.0", "alpha: 1.0e-10\n  unit_system: SI")
    cfg = parse_config(si + "experiment: dispersion\ngrids:\n  k_list: [1]\n")
    assert cfg.medium.omega0 == 1.0


# -- runs ------------------------------------------------------------------


def test_susceptibility_matches_library(tmp_path):
    code, _, _ = run(["run", str(CONFIGS / "susceptibility.yaml"), "--output-dir", str(tmp_path)])
    assert code == 0
    cfg = load_config(CONFIGS / "susceptibility.yaml")
    ref = real_frequency_response(LaplaceResponse(MediumParams(), CouplingSpec.ohmic(0.1)), cfg.omega_grid)
    assert (tmp_path / "susceptibility.csv").read_bytes() == ref.to_csv().encode()


def test_commutator_summary(tmp_path):
    cfg = write(tmp_path, BASE + "experiment: commutator\ngrids:\n  k_list: [1.0]\n  t_grid: {start: 0, stop: 50, num: 26}\n")
    code, out, _ = run(["run", cfg, "--output-dir", str(tmp_path)])
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("max_ccr_deviation"))
    assert float(line.split()[1]) < 1e-5
    meta = json.loads((tmp_path / "commutator.meta.json").read_text())
    assert meta["summary"]["max_ccr_deviation"] == float(line.split()[1])


def test_numerical_failure_exit_3(tmp_path):
    cfg = write(tmp_path, BASE + "experiment: fdt\ngrids:\n  omega_grid: [1.0]\n")
    code, _, err = run(["run", cfg, "--output-dir", str(tmp_path)])
    assert code == 3
    assert "DivergenceError" in err
    assert not (tmp_path / "fdt.csv").exists()


def test_domain_failure_exit_2(tmp_path):
    cfg = write(tmp_path, BASE + "experiment: langevin\ngrids:\n  t_grid: {start: 0, stop: 10, num: 11}\n")
    code, _, err = run(["run", cfg, "--output-dir", str(tmp_path)])
    assert code == 2 and "StepTooLargeError" in err


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DAMPOL_OUTPUT_DIR", str(tmp_path / "env"))
    code, _, _ = run(["run", str(CONFIGS / "dispersion.yaml")])
    assert code == 0
    assert (tmp_path / "env" / "dispersion.csv").exists()
    # the command-line flag wins
    code, _, _ = run(["run", str(CONFIGS / "dispersion.yaml"), "--output-dir", str(tmp_path / "flag")])
    assert (tmp_path / "flag" / "dispersion.csv").exists()


def test_metadata_sidecar(tmp_path):
    run(["run", str(CONFIGS / "dispersion.yaml"), "--output-dir", str(tmp_path)])
    meta = json.loads((tmp_path / "dispersion.meta.json").read_text())
    assert meta["config"]["experiment"] == "dispersion"
    assert meta["version"]
    assert set(meta["timings_s"]) == {"parse", "run", "total"}


def test_json_lines_output(tmp_path):
    cfg = write(tmp_path, (CONFIGS / "dispersion.yaml").read_text() + "output:\n  format: json-lines\n")
    run(["run", cfg, "--output-dir", str(tmp_path)])
    rows = [json.loads(l) for l in (tmp_path / "dispersion.jsonl").read_text().splitlines()]
    assert len(rows) == 12
    assert set(rows[0]) == {"k", "re_s", "im_s", "re_residue", "im_residue", "multiplicity"}
    assert isinstance(rows[0]["multiplicity"], int)


def test_threads_do_not_change_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["run", str(CONFIGS / "dispersion.yaml"), "--output-dir", str(a)])
    run(["run", str(CONFIGS / "dispersion.yaml"), "--output-dir", str(b), "--threads", "3"])
    assert (a / "dispersion.csv").read_bytes() == (b / "dispersion.csv").read_bytes()


def test_csv_format(tmp_path):
    run(["run", str(CONFIGS / "long_time.yaml"), "--output-dir", str(tmp_path)])
    raw = (tmp_path / "long_time.csv").read_bytes()
    assert b"\r" not in raw
    header, first = raw.decode("utf-8").splitlines()[:2]
    assert header == "k,omega,amp_re,amp_im,amp_abs"
    assert all(len(c.split("e")[0].replace("-", "").replace(".", "")) == 17 for c in first.split(","))


def test_regen_golden_only_on_request(tmp_path):
    gdir = tmp_path / "golden"
    run(["run", str(CONFIGS / "dispersion.yaml"), "--output-dir", str(tmp_path), "--golden-dir", str(gdir)])
    assert not gdir.exists()
    run(["run", str(CONFIGS / "dispersion.yaml"), "--output-dir", str(tmp_path), "--golden-dir", str(gdir),
         "--regen-golden"])
    assert (gdir / "dispersion.csv").read_bytes() == (tmp_path / "dispersion.csv").read_bytes()
