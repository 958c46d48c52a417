"""Deterministic CSV/JSON emission with the producing configuration embedded."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .qutrit import SWEEP_COLUMNS

SCHEMA_VERSION = 1
SCHEMA_PREFIX = "fluxqutrit"

CSV_HEADERS = {
    "levels": ("flux", "level", "energy"),
    "sweep": tuple(SWEEP_COLUMNS),
    "table": ("regime", "status", "e_c", "e_j", "e_l", "flux", "levels", "omega10", "omega21",
              "delta_hubbard", "delta_protect", "delta_protect_signed", "protect_pair", "alpha",
              "p_over_j_cap", "p_over_j_ind", "w1", "w2", "regimes", "t_diel_us", "t_diel_pair",
              "t_phi_us", "t_phi_pair"),
    "two_qutrit_levels": ("g", "block", "k", "e_rwa", "e_corrected", "e_full"),
    "two_qutrit_params": ("g", "matrix", "j_hop", "alpha", "alpha_prime", "p_hop",
                          "dw1_sq", "dw2_sq", "w1", "w2"),
    "phase_diagram": ("axis1", "axis2", "e", "g1", "g1_pair", "m", "stability", "label", "error"),
    "trajectory": ("t", "site", "n", "n_pair"),
    "correlators": ("r", "g1", "g1_pair", "nn", "pair_corr"),
}


def schema_tag(kind: str) -> str:
    return f"{SCHEMA_PREFIX}/{kind}/v{SCHEMA_VERSION}"


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    return obj


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_json(path, kind: str, payload: dict, config: dict) -> Path:
    path = Path(path)
    doc = {"schema": schema_tag(kind), "config": to_jsonable(config), "data": to_jsonable(payload)}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_csv(path, kind: str, rows, config: dict) -> Path:
    """CSV with two comment lines (schema tag, config JSON) above a fixed header.

    ``rows`` are dicts keyed by header names or sequences in header order;
    missing keys are written as empty cells.
    """
    header = CSV_HEADERS[kind]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {schema_tag(kind)}\n")
        fh.write("# config: " + json.dumps(to_jsonable(config), sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                unknown = set(row) - set(header)
                if unknown:
                    raise KeyError(f"columns not in the {kind} schema: {sorted(unknown)}")
                row = [row.get(k) for k in header]
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """(schema, config, rows as dicts of strings) from a file written by :func:`write_csv`."""
    schema = config = None
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# schema: "):
            schema = line[len("# schema: "):]
        elif line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        else:
            body.append(line)
    return schema, config, list(csv.DictReader(body))
