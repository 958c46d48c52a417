"""Run configurations: per-command parameter schemas, file loading and validation.

A configuration file is TOML whose tables group parameters (``[circuit]``,
``[lattice]``, ``[grid]``, ...). Output files embed the resolved
configuration as JSON, and such files (``.json``/``.csv``) are accepted as
configuration input too, so every run can be replayed from its output.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValidationError):
    """Invalid, missing or unknown configuration entries."""


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # float, int, bool, str, floats, ints, grid
    default: object = None
    section: str = "run"
    flag: str | None = None
    help: str = ""
    required: bool = False
    choices: tuple | None = None

    @property
    def option(self) -> str:
        return self.flag or "--" + self.name.replace("_", "-")


def parse_grid(text) -> np.ndarray:
    """'lo:hi:num' (inclusive linspace) or an explicit list of numbers."""
    if isinstance(text, (list, tuple)):
        return np.asarray([float(v) for v in text])
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid {text!r} is not of the form lo:hi:num")
    lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    if num < 2:
        raise ConfigError(f"grid {text!r} needs at least 2 points")
    return np.linspace(lo, hi, num)


def _coerce(p: Param, value):
    if value is None:
        return None
    try:
        if p.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise ConfigError(f"{p.name} must be finite")
        elif p.kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            out = int(value)
        elif p.kind == "bool":
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise TypeError
                out = value.lower() in ("true", "1", "yes")
            elif isinstance(value, bool):
                out = value
            else:
                raise TypeError
        elif p.kind == "str":
            if not isinstance(value, str):
                raise TypeError
            out = value
        elif p.kind in ("floats", "ints"):
            cast = float if p.kind == "floats" else int
            items = value.split(",") if isinstance(value, str) else list(value)
            out = [cast(v) for v in items if str(v).strip() != ""]
        elif p.kind == "grid":
            parse_grid(value)
            out = value if isinstance(value, str) else [float(v) for v in value]
        else:
            raise AssertionError(p.kind)
    except (TypeError, ValueError):
        raise ConfigError(f"{p.name}: cannot read {value!r} as {p.kind}") from None
    if p.choices is not None and out not in p.choices:
        raise ConfigError(f"{p.name} must be one of {', '.join(map(str, p.choices))}")
    return out


# --------------------------------------------------------------------------
# parameter groups

def _circuit(required=True):
    return [
        Param("e_c", "float", None, "circuit", "--ec", "charging energy (GHz)", required),
        Param("e_j", "float", None, "circuit", "--ej", "Josephson energy (GHz)", required),
        Param("e_l", "float", None, "circuit", "--el", "inductive energy (GHz)", required),
        Param("flux", "float", 0.0, "circuit", "--flux", "external flux (flux quanta)"),
    ]


POLICIES = ("lowest-three", "skip-second")
REGIME_KEYS = ("pp", "ff", "pf", "fp")
DYNAMICS_REGIMES = ("sf", "psf", "psf*", "cl", "pcb")

_NUMERICS = [
    Param("basis_size", "int", 150, "numerics", help="oscillator basis size"),
    Param("n_levels", "int", 10, "numerics", help="number of levels kept"),
]

_POLICY = [Param("policy", "str", "lowest-three", "qutrit", help="qutrit level choice", choices=POLICIES)]

_NOISE = [
    Param("temperature", "float", 0.020, "noise", help="bath temperature (K)"),
    Param("loss_tangent_amp", "float", 2e-6, "noise"),
    Param("loss_tangent_exp", "float", 0.15, "noise"),
    Param("loss_tangent_pivot", "float", 6.0, "noise", help="loss tangent pivot frequency (GHz)"),
    Param("flux_noise_amp", "float", 1e-6, "noise", help="1/f flux noise amplitude (flux quanta)"),
]

# lattice constants default to None so a preset can fill what the user left unset
_LATTICE = [
    Param("j_hop", "float", None, "lattice", "--J", "hopping J"),
    Param("alpha", "float", None, "lattice", help="correlated-hopping factor"),
    Param("p_hop", "float", None, "lattice", "--P", "pair hopping P"),
    Param("delta", "float", None, "lattice", help="on-site interaction"),
    Param("dw1", "float", None, "lattice", help="W(1) - W(0)"),
    Param("dw2", "float", None, "lattice", help="W(2) - W(0)"),
    Param("w0", "float", None, "lattice", help="W(0)"),
    Param("w_sign", "int", None, "lattice", help="sign of the W product term", choices=(-1, 1)),
]
LATTICE_DEFAULTS = {"j_hop": 1.0, "alpha": 1.0, "p_hop": 0.0, "delta": 0.0,
                    "dw1": 0.0, "dw2": 0.0, "w0": 0.0, "w_sign": 1}

_RUN = [
    Param("out_dir", "str", ".", "output", "--out", "output directory"),
    Param("prefix", "str", None, "output", help="output file stem (default: command name)"),
    Param("seed", "int", 0, "run", help="seed for randomised starts"),
    Param("workers", "int", None, "run", help="worker processes (default: CPU count)"),
]

_HHJJ = [
    Param("model", "str", "fluxonium", "circuit", choices=("fluxonium", "hhjj")),
    Param("gap", "float", 1.0, "hhjj", help="superconducting gap (GHz)"),
    Param("transmissions_a", "floats", [], "hhjj", help="channel transmissions, junction A"),
    Param("transmissions_b", "floats", [], "hhjj", help="channel transmissions, junction B"),
    Param("charge_bias", "float", 0.0, "hhjj"),
    Param("charge_cutoff", "int", 40, "hhjj"),
]

SCHEMAS: dict[str, list[Param]] = {
    "spectrum": _circuit(required=False) + _HHJJ + _NUMERICS + [
        Param("flux_grid", "grid", None, "grid", help="lo:hi:num flux grid for a level diagram"),
    ] + _RUN,
    "qutrit": _circuit() + _POLICY + _NUMERICS + [
        Param("auto_resonance", "bool", False, "qutrit", help="move the flux to the nearest resonance"),
    ] + _RUN,
    "coherence": _circuit() + _POLICY + _NUMERICS + _NOISE + [
        Param("auto_resonance", "bool", False, "qutrit", help="move the flux to the nearest resonance"),
    ] + _RUN,
    "sweep": _circuit(required=False) + _POLICY + _NOISE + [
        Param("basis_size", "int", 150, "numerics"),
        Param("axes", "str", "e_j,e_l", "grid", help="two of e_j, e_l, flux"),
        Param("axis1", "grid", None, "grid", help="lo:hi:num for the first axis", required=True),
        Param("axis2", "grid", None, "grid", help="lo:hi:num for the second axis", required=True),
        Param("auto_resonance", "bool", True, "qutrit"),
    ] + _RUN,
    "table1": _NOISE + [
        Param("rows", "str", ",".join(REGIME_KEYS), "table", help="comma-separated regime keys"),
        Param("policy", "str", None, "qutrit", help="override each row's level choice", choices=POLICIES),
        Param("basis_size", "int", 150, "numerics"),
    ] + _RUN,
    "two-qutrit": [
        Param("regime", "str", "pp", "pair", choices=REGIME_KEYS),
        Param("channel", "str", "capacitive", "pair", choices=("capacitive", "inductive")),
        Param("g_max", "float", 0.2, "pair", "--gc-max", "largest coupling (GHz)"),
        Param("steps", "int", 40, "pair", help="number of coupling values"),
        Param("level_cutoff", "int", 12, "numerics"),
        Param("basis_size", "int", 150, "numerics"),
        Param("policy", "str", None, "qutrit", choices=POLICIES),
    ] + _RUN,
    "phase-diagram": _LATTICE + [
        Param("axes", "str", "alpha,delta", "grid", help="two scan axes"),
        Param("axis1", "grid", None, "grid", help="lo:hi:num (default depends on the axis)"),
        Param("axis2", "grid", None, "grid"),
        Param("n", "float", 1.0, "mean_field", help="filling"),
        Param("z", "float", 2.0, "mean_field", help="coordination number"),
        Param("ansatz", "str", "uniform", "mean_field", choices=("uniform", "bipartite")),
        Param("stability", "bool", True, "mean_field"),
    ] + _RUN,
    "ed-ground": _LATTICE + [
        Param("L", "int", None, "chain", "--L", "number of sites", True),
        Param("N", "int", None, "chain", "--N", "number of bosons", True),
        Param("periodic", "bool", True, "chain"),
        Param("reference_site", "int", 0, "chain"),
        Param("stability", "bool", False, "chain", help="also solve N-2 and N+2"),
    ] + _RUN,
    "ed-dynamics": _LATTICE + [
        Param("L", "int", 13, "chain", "--L", "number of sites"),
        Param("init", "ints", [1, 2, 1], "chain", help="occupations placed at the chain centre"),
        Param("regime", "str", None, "chain", help="lattice preset", choices=DYNAMICS_REGIMES),
        Param("periodic", "bool", False, "chain"),
        Param("t_max", "float", 5.0, "time", help="final time (units of 1/J)"),
        Param("n_times", "int", 101, "time"),
        Param("dt", "float", None, "time", help="largest Krylov step"),
    ] + _RUN,
    "gauge-check": _LATTICE + [
        Param("L", "int", None, "chain", "--L", "number of sites", True),
        Param("N", "int", None, "chain", "--N", "number of bosons", True),
        Param("periodic", "bool", True, "chain"),
        Param("tol", "float", 1e-10, "chain"),
    ] + _RUN,
}

COMMANDS = tuple(SCHEMAS)


def schema(command: str) -> dict[str, Param]:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    return {p.name: p for p in SCHEMAS[command]}


def _flatten_file(command: str, doc: dict) -> dict:
    """Merge the TOML tables into one flat dict, rejecting unknown names."""
    params = schema(command)
    named = doc.get("command")
    if named is not None and named != command:
        raise ConfigError(f"config is for {named!r}, not {command!r}")
    flat = {}
    for key, value in doc.items():
        if key == "command":
            continue
        if isinstance(value, dict):
            for sub, v in value.items():
                p = params.get(sub)
                if p is None or p.section != key:
                    raise ConfigError(f"unknown key [{key}].{sub} for {command}")
                flat[sub] = v
        else:
            if key not in params:
                raise ConfigError(f"unknown key {key!r} for {command}")
            flat[key] = value
    return flat


def load_file(command: str, path) -> dict:
    """Flat parameter dict from a TOML config or from an emitted JSON/CSV result."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        doc = json.loads(text)
        doc = doc.get("config", doc)
        return _embedded(command, doc)
    if path.suffix == ".csv":
        for line in text.splitlines():
            if line.startswith("# config: "):
                return _embedded(command, json.loads(line[len("# config: "):]))
        raise ConfigError(f"{path} carries no embedded config")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return _flatten_file(command, doc)


def _embedded(command: str, doc: dict) -> dict:
    doc = dict(doc)
    named = doc.pop("command", command)
    if named != command:
        raise ConfigError(f"config is for {named!r}, not {command!r}")
    params = schema(command)
    unknown = set(doc) - set(params)
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}")
    return {k: v for k, v in doc.items() if v is not None}


def resolve(command: str, file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then file values, then overrides; validated and complete.

    The result carries every schema key plus ``command``; it is what output
    files embed.
    """
    params = schema(command)
    merged = {name: p.default for name, p in params.items()}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in params:
                raise ConfigError(f"unknown key {key!r} for {command}")
            if value is not None:
                merged[key] = value
    out = {"command": command}
    for name, p in params.items():
        value = _coerce(p, merged[name])
        if p.required and value is None:
            raise ConfigError(f"missing required parameter {name} ({p.option})")
        out[name] = value
    if out.get("prefix") is None:
        out["prefix"] = command.replace("-", "_")
    if out.get("workers") is not None and out["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    return out


def lattice_values(config: dict, preset: dict | None = None) -> dict:
    """Lattice constants: explicit config values over a preset over defaults."""
    out = dict(LATTICE_DEFAULTS)
    out.update(preset or {})
    out.update({k: config[k] for k in LATTICE_DEFAULTS if config.get(k) is not None})
    return out
