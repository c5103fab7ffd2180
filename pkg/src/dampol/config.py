"""Scenario configuration: YAML parsing with strict, line-precise validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .errors import DampolError, DomainError
from .medium import CouplingSpec, MediumParams, UnitSystem, to_scaled

__all__ = [
    "EXPERIMENTS",
    "DEFAULTS",
    "REQUIRED_GRIDS",
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "parse_config",
]

EXPERIMENTS = {
    "susceptibility": "Sample the real-frequency susceptibility chi(omega) on omega_grid.",
    "kk_check": "Compare Re chi with the Hilbert transform of Im chi on omega_grid.",
    "dispersion": "List the dispersion poles and residues of 1/D(s; k) for each k in k_list.",
    "mode_evolution": "Evolve the operator coefficients of one observable per mode over t_grid.",
    "commutator": "Track the equal-time [A, pi_F] commutator per mode over t_grid.",
    "langevin": "Integrate the mean polarization equation with memory over t_grid.",
    "long_time": "Evaluate the surviving bath amplitude of A per mode on omega_grid.",
    "fdt": "Compare noise and dissipation spectra on omega_grid.",
    "radiation_reaction": "Split the transverse field of each mode into vacuum and reaction parts.",
}

REQUIRED_GRIDS = {
    "susceptibility": ("omega_grid",),
    "kk_check": ("omega_grid",),
    "dispersion": ("k_list",),
    "mode_evolution": ("k_list", "t_grid"),
    "commutator": ("k_list", "t_grid"),
    "langevin": ("t_grid",),
    "long_time": ("k_list", "omega_grid"),
    "fdt": ("omega_grid",),
    "radiation_reaction": ("k_list", "t_grid"),
}

# physics and numerics defaults, each overridable from the ``settings`` block
DEFAULTS = {
    "eta": 1e-8,  # offset of the real-frequency limit s = -i w + eta
    "n_gl": 8,  # Gauss-Legendre nodes per bath-frequency panel
    "quadrature_tol": 1e-4,  # allowed change under node doubling
    "observable": "A",  # observable for mode_evolution
    "y0": 1.0,  # langevin initial displacement
    "v0": 0.0,  # langevin initial velocity
    "drive_amplitude": 0.0,  # langevin drive E(t) = amplitude cos(drive_frequency t)
    "drive_frequency": 1.0,
    "output_stride": 1,  # write every n-th time sample
    "kk_min_points": 512,  # fewest grid nodes accepted by the Kramers-Kronig check
    "history_step": 1e-3,  # sampling step of Y' histories in radiation_reaction
}

DEFAULT_BATH = {"n_bath": 400, "cutoff": 20.0}


class ConfigError(DampolError):
    """Invalid scenario configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class ScenarioConfig:
    medium: MediumParams
    coupling: CouplingSpec
    experiment: str
    k_list: tuple = ()
    t_grid: np.ndarray | None = None
    omega_grid: np.ndarray | None = None
    n_bath: int = 400
    bath_cutoff: float = 20.0
    settings: dict = field(default_factory=dict)
    output_dir: str | None = None
    output_format: str = "csv"
    source: dict = field(default_factory=dict)

    def setting(self, name):
        return self.settings.get(name, DEFAULTS[name])


_SCHEMA = {
    "medium": {"rho": "number", "omega0": "number", "alpha": "number", "unit_system": "str"},
    "coupling": {"kind": "str", "beta": "number", "cutoff": "number", "table": "table"},
    "experiment": "str",
    "grids": {"k_list": "numbers", "t_grid": "grid", "omega_grid": "grid"},
    "bath": {"n_bath": "int", "cutoff": "number"},
    "settings": {k: ("str" if isinstance(v, str) else "int" if isinstance(v, int) else "number") for k, v in DEFAULTS.items()},
    "output": {"directory": "str", "format": "str"},
}
_REQUIRED_SECTIONS = ("medium", "coupling", "experiment")


def _line(node):
    return node.start_mark.line + 1


def _scalar(node, kind, where):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"{where}: expected a {kind}", _line(node))
    value = yaml.safe_load(yaml.serialize(node))
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}", _line(node))
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}", _line(node))
        return value
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {value!r}", _line(node)) from None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where}: expected a finite number, got {value!r}", _line(node))
    return float(value)


def _numbers(node, where):
    if not isinstance(node, yaml.SequenceNode):
        raise ConfigError(f"{where}: expected a list of numbers", _line(node))
    return [_scalar(item, "number", where) for item in node.value]


def _grid(node, where):
    """Explicit list, or mapping {start, stop, num, spacing: linear|log}."""
    if isinstance(node, yaml.SequenceNode):
        return np.array(_numbers(node, where))
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{where}: expected a list or a {{start, stop, num}} mapping", _line(node))
    spec = {}
    allowed = {"start": "number", "stop": "number", "num": "int", "spacing": "str"}
    for knode, vnode in node.value:
        key = knode.value
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r} (allowed: {', '.join(allowed)})", _line(knode))
        spec[key] = _scalar(vnode, allowed[key], f"{where}.{key}")
    for key in ("start", "stop", "num"):
        if key not in spec:
            raise ConfigError(f"{where}: missing {key!r}", _line(node))
    if spec["num"] < 1:
        raise ConfigError(f"{where}.num must be positive", _line(node))
    spacing = spec.get("spacing", "linear")
    if spacing == "linear":
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    if spacing == "log":
        if spec["start"] <= 0 or spec["stop"] <= 0:
            raise ConfigError(f"{where}: log spacing needs positive bounds", _line(node))
        return np.geomspace(spec["start"], spec["stop"], spec["num"])
    raise ConfigError(f"{where}.spacing must be 'linear' or 'log', got {spacing!r}", _line(node))


def _table(node, where):
    if not isinstance(node, yaml.SequenceNode):
        raise ConfigError(f"{where}: expected a list of [omega, |f|^2] pairs", _line(node))
    rows = []
    for item in node.value:
        pair = _numbers(item, where)
        if len(pair) != 2:
            raise ConfigError(f"{where}: each row needs exactly two numbers", _line(item))
        rows.append(tuple(pair))
    return tuple(rows)


def _section(node, name):
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"section {name!r} must be a mapping", _line(node))
    out, lines = {}, {}
    schema = _SCHEMA[name]
    for knode, vnode in node.value:
        key = knode.value
        if key not in schema:
            raise ConfigError(f"unknown key {name}.{key} (allowed: {', '.join(schema)})", _line(knode))
        if key in out:
            raise ConfigError(f"duplicate key {name}.{key}", _line(knode))
        kind = schema[key]
        where = f"{name}.{key}"
        if kind == "numbers":
            out[key] = _numbers(vnode, where)
        elif kind == "grid":
            out[key] = _grid(vnode, where)
        elif kind == "table":
            out[key] = _table(vnode, where)
        else:
            out[key] = _scalar(vnode, kind, where)
        lines[key] = _line(vnode)
    return out, lines


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario YAML; raises ``ConfigError``."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from None
    if root is None or not isinstance(root, yaml.MappingNode):
        raise ConfigError("config must be a mapping of sections", 1)
    sections, lines = {}, {}
    for knode, vnode in root.value:
        key = knode.value
        if key not in _SCHEMA:
            raise ConfigError(f"unknown section {key!r} (allowed: {', '.join(_SCHEMA)})", _line(knode))
        if key in sections:
            raise ConfigError(f"duplicate section {key!r}", _line(knode))
        lines[key] = _line(knode)
        if key == "experiment":
            sections[key] = _scalar(vnode, "str", "experiment")
        else:
            sections[key], _ = _section(vnode, key)
    for req in _REQUIRED_SECTIONS:
        if req not in sections:
            raise ConfigError(f"missing required section {req!r}", 1)

    exp = sections["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r} (expected one of: {', '.join(EXPERIMENTS)})", lines["experiment"])

    med = sections["medium"]
    try:
        unit = UnitSystem(med.get("unit_system", "scaled"))
    except ValueError:
        raise ConfigError(f"medium.unit_system must be 'SI' or 'scaled'", lines["medium"]) from None
    try:
        if unit is UnitSystem.SI:
            params = MediumParams.si(med.get("rho", 1.0), med.get("omega0", 1.0), med.get("alpha", 1.0))
        else:
            params = MediumParams(rho=med.get("rho", 1.0), omega0=med.get("omega0", 1.0), alpha=med.get("alpha", 1.0))
    except DomainError as exc:
        raise ConfigError(f"medium: {exc}", lines["medium"]) from None

    cpl = sections["coupling"]
    if "kind" not in cpl:
        raise ConfigError("coupling.kind is required", lines["coupling"])
    try:
        coupling = CouplingSpec(cpl["kind"], beta=cpl.get("beta", 0.0), cutoff=cpl.get("cutoff", 0.0), table=cpl.get("table"))
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"coupling: {exc}", lines["coupling"]) from None
    params, coupling = to_scaled(params, coupling)

    grids = sections.get("grids", {})
    glines = {}
    if "grids" in sections:
        glines = _section_lines(root, "grids")
    for g in REQUIRED_GRIDS[exp]:
        val = grids.get(g)
        if val is None or len(val) == 0:
            raise ConfigError(
                f"experiment {exp!r} requires non-empty grids.{g}", glines.get(g, lines.get("grids", lines["experiment"]))
            )
    k_list = tuple(grids.get("k_list", ()))
    for k in k_list:
        if not k > 0:
            raise ConfigError(f"grids.k_list entries must be positive, got {k}", glines.get("k_list"))
    omega = grids.get("omega_grid")
    if omega is not None and (np.any(omega <= 0) or np.any(np.diff(omega) <= 0)):
        raise ConfigError("grids.omega_grid must be positive and increasing", glines.get("omega_grid"))
    t_grid = grids.get("t_grid")
    if t_grid is not None and np.any(np.diff(t_grid) <= 0):
        raise ConfigError("grids.t_grid must be increasing", glines.get("t_grid"))

    bath = {**DEFAULT_BATH, **sections.get("bath", {})}
    settings = sections.get("settings", {})
    if "observable" in settings:
        from .modes import OBSERVABLES

        if settings["observable"] not in OBSERVABLES:
            raise ConfigError(
                f"settings.observable must be one of {', '.join(OBSERVABLES)}", _section_lines(root, "settings")["observable"]
            )
    out = sections.get("output", {})
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json-lines"):
        raise ConfigError("output.format must be 'csv' or 'json-lines'", _section_lines(root, "output").get("format"))
    return ScenarioConfig(
        medium=params,
        coupling=coupling,
        experiment=exp,
        k_list=k_list,
        t_grid=t_grid,
        omega_grid=omega,
        n_bath=bath["n_bath"],
        bath_cutoff=bath["cutoff"],
        settings=dict(settings),
        output_dir=out.get("directory"),
        output_format=fmt,
        source=yaml.safe_load(text),
    )


def _section_lines(root, name):
    for knode, vnode in root.value:
        if knode.value == name and isinstance(vnode, yaml.MappingNode):
            return {k.value: _line(v) for k, v in vnode.value}
    return {}


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
