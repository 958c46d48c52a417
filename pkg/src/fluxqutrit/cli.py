"""Command-line front end: ``fluxqutrit <command> [--config FILE] [flags]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import io
from .config import ConfigError, lattice_values, parse_grid
from .effective import CouplingSpec, LatticeModel, chain_bonds, coupling_curves
from .errors import NumericalError, PolicyError, PreconditionError, ValidationError
from .qutrit import (
    REFERENCE_E_C,
    REFERENCE_E_L,
    REFERENCE_REGIMES,
    CoherenceParams,
    LevelPolicy,
    diagonalize_fluxonium,
    extract_qutrit,
    qutrit_coherence,
    reference_regime_row,
    resonant_spec,
    sweep_parameters,
)
from .spectra import CircuitSpec, HHJJSpec, diagonalize_periodic, fluxonium_energies

log = logging.getLogger("fluxqutrit")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# J = 1 units; the pcb interactions are repulsive, dW_r^2 = w_r (J + P)
DYNAMICS_PRESETS = {
    "sf": {"alpha": 1.0},
    "psf": {"alpha": 1.0, "p_hop": 3.0},
    "psf*": {"alpha": 0.4, "delta": -2.0},
    "cl": {"alpha": 2.0},
    "pcb": {"alpha": 1.0, "p_hop": 1.0, "dw1": math.sqrt(0.7 * 2.0), "dw2": math.sqrt(4.0 * 2.0), "w_sign": 1},
}

DEFAULT_SCAN_GRIDS = {
    "alpha": "0:2:33",
    "delta": "-30:30:33",
    "p_hop": "0:20:33",
    "j_hop": "0:2:33",
    "dw1": "0:2:33",
    "dw2": "0:2:33",
    "w0": "0:2:33",
    "p_over_j": "0:20:33",
    "delta_over_zj": "-15:15:33",
    "dw2sq_over_p": "-4:6:33",
    "delta_w_over_zp": "-1.5:1.5:33",
}


def _policy(name):
    return None if name is None else LevelPolicy.parse(name.replace("-", "_"))


def _coherence(cfg) -> CoherenceParams:
    return CoherenceParams(
        temperature=cfg["temperature"],
        loss_tangent_amp=cfg["loss_tangent_amp"],
        loss_tangent_exp=cfg["loss_tangent_exp"],
        loss_tangent_pivot=cfg["loss_tangent_pivot"],
        flux_noise_amp=cfg["flux_noise_amp"],
    )


def _out(cfg, suffix: str) -> Path:
    return Path(cfg["out_dir"]) / f"{cfg['prefix']}{suffix}"


def _circuit(cfg) -> CircuitSpec:
    missing = [k for k in ("e_c", "e_j", "e_l") if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing circuit parameters: {', '.join(missing)}")
    return CircuitSpec(cfg["e_c"], cfg["e_j"], cfg["e_l"], cfg["flux"])


def _lattice(cfg, n_sites: int, periodic: bool, preset=None) -> LatticeModel:
    values = lattice_values(cfg, preset)
    return LatticeModel(n_sites=n_sites, bonds=chain_bonds(n_sites, periodic),
                        boundary="periodic" if periodic else "open", **values)


# --------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg) -> list[Path]:
    if cfg["e_c"] is None:
        raise ConfigError("missing required parameter e_c (--ec)")
    if cfg["model"] == "hhjj":
        if not (cfg["transmissions_a"] or cfg["transmissions_b"]):
            raise ConfigError("hhjj model needs transmissions_a or transmissions_b")

        def solve(flux):
            spec = HHJJSpec(cfg["gap"], cfg["transmissions_a"], cfg["transmissions_b"], flux, cfg["charge_bias"])
            return diagonalize_periodic(spec, cfg["e_c"], n_levels=cfg["n_levels"], charge_cutoff=cfg["charge_cutoff"])

        spectrum = solve(cfg["flux"])
        energies_at = lambda flux: solve(flux).energies  # noqa: E731
    else:
        spec = _circuit(cfg)
        spectrum = diagonalize_fluxonium(spec, cfg["n_levels"], cfg["basis_size"])
        energies_at = lambda flux: fluxonium_energies(  # noqa: E731
            spec.with_flux(flux), cfg["n_levels"], cfg["basis_size"])

    e = spectrum.energies
    payload = {"spectrum": spectrum.to_dict(), "omega10": float(e[1] - e[0]) if len(e) > 1 else None,
               "transitions": (e - e[0]).tolist()}
    paths = [io.write_json(_out(cfg, ".json"), "spectrum", payload, cfg)]

    fluxes = parse_grid(cfg["flux_grid"]) if cfg["flux_grid"] is not None else [cfg["flux"]]
    rows = []
    for flux in fluxes:
        for k, energy in enumerate(energies_at(float(flux))):
            rows.append((float(flux), k, float(energy)))
    paths.append(io.write_csv(_out(cfg, "_levels.csv"), "levels", rows, cfg))
    return paths


def _qutrit_setup(cfg):
    policy = _policy(cfg["policy"])
    spec = _circuit(cfg)
    if cfg["auto_resonance"]:
        spec = resonant_spec(spec, policy, cfg["flux"], cfg["basis_size"])
    n_levels = max(cfg["n_levels"], 8)
    spectrum = diagonalize_fluxonium(spec, n_levels, cfg["basis_size"])
    return spec, spectrum, extract_qutrit(spectrum, policy, flux=spec.flux)


def cmd_qutrit(cfg) -> list[Path]:
    spec, spectrum, q = _qutrit_setup(cfg)
    payload = {
        "flux": spec.flux,
        "descriptor": q.summary(),
        "n3": {"re": np.real(q.n3), "im": np.imag(q.n3)},
        "phi3": {"re": np.real(q.phi3), "im": np.imag(q.phi3)},
    }
    return [io.write_json(_out(cfg, ".json"), "qutrit", payload, cfg)]


def cmd_coherence(cfg) -> list[Path]:
    spec, spectrum, q = _qutrit_setup(cfg)
    cs = qutrit_coherence(spec, spectrum, q.levels, _coherence(cfg), cfg["basis_size"])
    payload = {
        "flux": spec.flux,
        "levels": list(q.levels),
        "t_diel_us": {"%d-%d" % p: t for p, t in cs.t_diel.items()},
        "t_phi_us": {"%d-%d" % p: t for p, t in cs.t_phi.items()},
        "worst_t_diel_us": cs.worst_diel()[0],
        "worst_t_phi_us": cs.worst_phi()[0],
    }
    return [io.write_json(_out(cfg, ".json"), "coherence", payload, cfg)]


def cmd_sweep(cfg) -> list[Path]:
    names = [s.strip() for s in cfg["axes"].split(",")]
    if len(names) != 2:
        raise ConfigError("axes needs two comma-separated names")
    axes = {names[0]: parse_grid(cfg["axis1"]), names[1]: parse_grid(cfg["axis2"])}
    fixed = {k: cfg[k] for k in ("e_c", "e_j", "e_l", "flux") if cfg[k] is not None and k not in names}
    rows = sweep_parameters(axes, fixed, _policy(cfg["policy"]), cfg["auto_resonance"],
                            _coherence(cfg), cfg["basis_size"], cfg["workers"])
    return [
        io.write_csv(_out(cfg, ".csv"), "sweep", rows, cfg),
        io.write_json(_out(cfg, ".json"), "sweep", {"rows": rows}, cfg),
    ]


def cmd_table1(cfg) -> list[Path]:
    keys = [k.strip() for k in cfg["rows"].split(",") if k.strip()]
    unknown = set(keys) - set(REFERENCE_REGIMES)
    if unknown or not keys:
        raise ConfigError(f"rows must be drawn from {', '.join(REFERENCE_REGIMES)}")
    coh = _coherence(cfg)
    rows = []
    for key in keys:
        try:
            row = reference_regime_row(key, coh, _policy(cfg["policy"]), cfg["basis_size"])
            rows.append(row | {"status": "ok"})
        except (NumericalError, PolicyError) as exc:
            e_j = REFERENCE_REGIMES[key][0]
            rows.append({"regime": key, "status": f"error: {type(exc).__name__}: {exc}",
                         "e_c": REFERENCE_E_C, "e_j": e_j, "e_l": REFERENCE_E_L})
    return [io.write_csv(_out(cfg, ".csv"), "table", rows, cfg)]


def cmd_two_qutrit(cfg) -> list[Path]:
    e_j, default_policy, nominal = REFERENCE_REGIMES[cfg["regime"]]
    policy = _policy(cfg["policy"]) or default_policy
    template = CircuitSpec(REFERENCE_E_C, e_j, REFERENCE_E_L, nominal)
    spec = resonant_spec(template, policy, nominal, cfg["basis_size"])
    spectrum = diagonalize_fluxonium(spec, max(16, cfg["level_cutoff"]), cfg["basis_size"])
    q = extract_qutrit(spectrum, policy, flux=spec.flux)
    if cfg["steps"] < 1:
        raise ConfigError("steps must be >= 1")
    gs = cfg["g_max"] * np.arange(1, cfg["steps"] + 1) / cfg["steps"]
    channel = "g_c" if cfg["channel"] == "capacitive" else "g_l"
    couplings = [CouplingSpec(**{channel: float(g)}) for g in gs]
    levels, params = coupling_curves(spectrum, q, couplings, policy, cfg["level_cutoff"])
    return [
        io.write_csv(_out(cfg, "_levels.csv"), "two_qutrit_levels", levels, cfg),
        io.write_csv(_out(cfg, "_params.csv"), "two_qutrit_params", params, cfg),
        io.write_json(_out(cfg, ".json"), "two_qutrit",
                      {"flux": spec.flux, "descriptor": q.summary(), "levels": levels, "params": params}, cfg),
    ]


def cmd_phase_diagram(cfg) -> list[Path]:
    from .gutzwiller import phase_diagram_scan

    names = [s.strip() for s in cfg["axes"].split(",")]
    if len(names) != 2:
        raise ConfigError("axes needs two comma-separated names")
    grids = []
    for name, key in zip(names, ("axis1", "axis2")):
        text = cfg[key] if cfg[key] is not None else DEFAULT_SCAN_GRIDS.get(name)
        if text is None:
            raise ConfigError(f"no default grid for axis {name!r}; set {key}")
        grids.append(parse_grid(text))
    template = LatticeModel(**lattice_values(cfg))
    pd = phase_diagram_scan(dict(zip(names, grids)), cfg["n"], cfg["z"], template,
                            cfg["ansatz"], cfg["stability"], cfg["workers"])
    rows = []
    for k, row in enumerate(pd.rows()):
        idx = np.unravel_index(k, pd.labels.shape)
        rows.append(row + (pd.errors.get(idx, ""),))
    return [io.write_csv(_out(cfg, ".csv"), "phase_diagram", rows, cfg)]


def cmd_ed_ground(cfg) -> list[Path]:
    from .ed import build_hamiltonian, build_sector_basis, correlators, ground_state, stability_check

    L, N = cfg["L"], cfg["N"]
    if L < 2 or not 0 <= N <= 2 * L:
        raise ConfigError("need L >= 2 and 0 <= N <= 2L")
    model = _lattice(cfg, L, cfg["periodic"])
    basis = build_sector_basis(L, N)
    gs = ground_state(build_hamiltonian(model, basis), basis, seed=cfg["seed"])
    corr = correlators(gs.state, cfg["periodic"], cfg["reference_site"])
    stab = stability_check(model, N, cfg["seed"]) if cfg["stability"] else None
    payload = {
        "energy": gs.energy,
        "pair_number": float(corr.mean_pair_number),
        "stability": stab,
        "degeneracy": gs.degeneracy,
        "residual": gs.residual,
        "dimension": basis.dimension,
        "low_energies": gs.low_energies,
    }
    return [
        io.write_json(_out(cfg, ".json"), "ed_ground", payload, cfg),
        io.write_csv(_out(cfg, "_correlators.csv"), "correlators", corr.rows(), cfg),
    ]


def initial_occupation(n_sites: int, init) -> list[int]:
    """``init`` occupations placed at the centre of an empty chain."""
    init = list(init)
    if not init or len(init) > n_sites or any(not 0 <= v <= 2 for v in init):
        raise ConfigError("init must hold 1..L occupations in {0, 1, 2}")
    start = (n_sites - len(init)) // 2
    occ = [0] * n_sites
    occ[start:start + len(init)] = init
    return occ


def cmd_ed_dynamics(cfg) -> list[Path]:
    from .ed import SectorState, build_hamiltonian, build_sector_basis, time_evolve

    L = cfg["L"]
    occ = initial_occupation(L, cfg["init"])
    preset = DYNAMICS_PRESETS[cfg["regime"]] if cfg["regime"] else None
    model = _lattice(cfg, L, cfg["periodic"], preset)
    basis = build_sector_basis(L, sum(occ))
    psi0 = SectorState.fock(basis, occ)
    unit = 1.0 / abs(model.j_hop) if model.j_hop else 1.0
    if cfg["n_times"] < 2 or cfg["t_max"] <= 0:
        raise ConfigError("need n_times >= 2 and t_max > 0")
    times = np.linspace(0.0, cfg["t_max"] * unit, cfg["n_times"])
    traj = time_evolve(psi0, build_hamiltonian(model, basis), times, dt=cfg["dt"])
    return [io.write_csv(_out(cfg, ".csv"), "trajectory", traj.rows(), cfg)]


def cmd_gauge_check(cfg) -> list[Path]:
    from .ed import sublattice_gauge_check

    model = _lattice(cfg, cfg["L"], cfg["periodic"])
    report = sublattice_gauge_check(model, cfg["N"])
    payload = {"passed": report.passed(cfg["tol"]), **report.__dict__}
    return [io.write_json(_out(cfg, ".json"), "gauge_check", payload, cfg)]


COMMAND_FUNCS = {
    "spectrum": cmd_spectrum,
    "qutrit": cmd_qutrit,
    "coherence": cmd_coherence,
    "sweep": cmd_sweep,
    "table1": cmd_table1,
    "two-qutrit": cmd_two_qutrit,
    "phase-diagram": cmd_phase_diagram,
    "ed-ground": cmd_ed_ground,
    "ed-dynamics": cmd_ed_dynamics,
    "gauge-check": cmd_gauge_check,
}


# --------------------------------------------------------------------------
# argument parsing


def _add_param(parser, p: cfgmod.Param):
    kw = {"dest": p.name, "default": None, "help": p.help or None}
    if p.choices:
        kw["metavar"] = "{" + ",".join(map(str, p.choices)) + "}"
    if p.kind == "bool":
        parser.add_argument(p.option, action=argparse.BooleanOptionalAction, **kw)
    else:
        parser.add_argument(p.option, type=str, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluxqutrit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in cfgmod.COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML config, or a JSON/CSV result to replay")
        for p in cfgmod.SCHEMAS[name]:
            _add_param(sp, p)
    return parser


def run(command: str, file_values: dict | None = None, overrides: dict | None = None) -> list[Path]:
    """Resolve a configuration and execute one command; returns written paths."""
    cfg = cfgmod.resolve(command, file_values, overrides)
    return COMMAND_FUNCS[command](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    names = [p.name for p in cfgmod.SCHEMAS[args.command]]
    overrides = {k: getattr(args, k) for k in names if getattr(args, k) is not None}
    try:
        file_values = cfgmod.load_file(args.command, args.config) if args.config else {}
        paths = run(args.command, file_values, overrides)
    except (ValidationError, PreconditionError, PolicyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"fluxqutrit {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"fluxqutrit {args.command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
