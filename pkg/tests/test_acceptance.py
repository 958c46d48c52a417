"""End-to-end acceptance checks; each prints one PASS/FAIL line in the summary."""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fluxqutrit.cli import initial_occupation
from fluxqutrit.effective import (
    CouplingSpec,
    LatticeModel,
    build_two_qutrit_rwa,
    chain_model,
    qutrit_block_levels,
    schrieffer_wolff_correction,
    square_bonds,
    two_qutrit_lab_offset,
)
from fluxqutrit.ed import (
    SectorState,
    alpha0_ground_sector,
    build_hamiltonian,
    build_sector_basis,
    correlators,
    ground_state,
    sublattice_gauge_check,
    time_evolve,
)
from fluxqutrit.errors import PreconditionError
from fluxqutrit.gutzwiller import Boundary, analytic_boundary, boundary_mismatches, phase_diagram_scan
from fluxqutrit.qutrit import LevelPolicy, extract_qutrit, reference_regime_row, resonant_spec
from fluxqutrit.spectra import CircuitSpec, diagonalize_fluxonium, gauge_identity_residual


def report(number, title, checks, elapsed=None):
    """Record one summary line; ``checks`` maps a description to (ok, detail)."""
    failed = [f"{name}: {detail}" for name, (ok, detail) in checks.items() if not ok]
    timing = f" [{elapsed:.1f} s]" if elapsed is not None else ""
    status = "PASS" if not failed else "FAIL"
    line = f"criterion {number} {title}: {status}{timing}"
    if failed:
        line += " -- " + "; ".join(failed)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


def within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


# --------------------------------------------------------------------------
# 1. regime table


REGIME_TARGETS = {
    # flux, omega10, delta, alpha, P/J, w1, w2, T_diel, T_phi
    "pp": (0.413, 2.08, 0.393, 1.03, 0.29, 1.40, 1.22, 24.5, 13.9),
    "ff": (0.446, 2.39, 0.356, 2.8, 131.0, 48.2, 1.4, 21.8, 3.6),
    "pf": (0.243, 6.06, 0.697, 0.28, 4e-4, 0.05, 50.4, 13.2, 3.8),
    "fp": (0.393, 5.20, 0.750, 12.1, 7.8, 8612.0, 4151.0, 23.8, 3.3),
}


def test_regime_table():
    start = time.perf_counter()
    checks = {}
    for key, (flux, w10, delta, alpha, pj, w1, w2, t_diel, t_phi) in REGIME_TARGETS.items():
        row = reference_regime_row(key)
        values = {
            "flux": (row["flux"], flux, None), "omega10": (row["omega10"], w10, 0.02),
            "delta": (row["delta_protect"], delta, 0.05), "alpha": (row["alpha"], alpha, 0.05),
            "P/J": (row["p_over_j_cap"], pj, 0.10), "w1": (row["w1"], w1, 0.10), "w2": (row["w2"], w2, 0.10),
            "T_diel": (row["t_diel_us"], t_diel, 0.15), "T_phi": (row["t_phi_us"], t_phi, 0.15),
        }
        for name, (got, want, rel) in values.items():
            ok = abs(got - want) <= 0.003 if rel is None else within(got, want, rel)
            checks[f"{key} {name}"] = (ok, f"{got:.4g} vs {want:.4g}")
    elapsed = time.perf_counter() - start
    checks["runtime"] = (elapsed < 60, f"{elapsed:.1f} s")
    report(1, "regime table regression", checks, elapsed)


# --------------------------------------------------------------------------
# 2. exact identities


def test_exact_identities():
    rng = np.random.default_rng(7)
    checks = {}
    worst = 0.0
    for _ in range(10):
        spec = CircuitSpec(rng.uniform(0.3, 1.5), rng.uniform(0.0, 10.0), rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.5))
        sp = diagonalize_fluxonium(spec, basis_size=150)
        mask = (np.abs(sp.n_elems) > 1e-6) & ~np.eye(sp.n_levels, dtype=bool)
        worst = max(worst, float(gauge_identity_residual(sp)[mask].max()))
    checks["charge-phase identity"] = (worst < 1e-6, f"max relative residual {worst:.1e}")

    spec = CircuitSpec(0.6, 0.0, 1.5, 0.3)
    q = extract_qutrit(diagonalize_fluxonium(spec))
    w_p = math.sqrt(8 * 0.6 * 1.5)
    checks["harmonic omega10"] = (abs(q.omega10 - w_p) < 1e-6 * w_p, f"{q.omega10:.9f}")
    checks["harmonic alpha"] = (abs(q.alpha - 1.0) < 1e-6, f"{q.alpha:.9f}")
    checks["harmonic P/J"] = (abs(q.p_over_j_cap) < 1e-6, f"{q.p_over_j_cap:.2e}")
    report(2, "exact identities", checks)


# --------------------------------------------------------------------------
# 3. second-order correction


def test_second_order_correction():
    start = time.perf_counter()
    spec = resonant_spec(CircuitSpec(0.6, 2.2, 1.5, 0.413), LevelPolicy.LOWEST_THREE, 0.413)
    sp = diagonalize_fluxonium(spec, n_levels=16)
    q = extract_qutrit(sp)
    checks = {}

    base = schrieffer_wolff_correction(sp, sp, CouplingSpec(g_c=0.02))
    worst = 0.0
    for scale in (0.5, 2.0, 5.0):
        scaled = schrieffer_wolff_correction(sp, sp, CouplingSpec(g_c=0.02 * scale))
        worst = max(worst, float(np.abs(scaled - scale**2 * base).max() / np.abs(scale**2 * base).max()))
    checks["quadratic scaling"] = (worst <= 1e-10, f"relative deviation {worst:.1e}")

    offset = two_qutrit_lab_offset(q, sp)
    for g in (0.025, 0.05, 0.1):
        c = CouplingSpec(g_c=g)
        rwa = replace(build_two_qutrit_rwa(q, c), offset=offset)
        corrected = rwa + schrieffer_wolff_correction(sp, sp, c)
        full = qutrit_block_levels(sp, sp, c)
        e_rwa, e_sw = rwa.block_eigenvalues(True), corrected.block_eigenvalues(True)
        for n in range(1, 5):
            err_rwa = np.abs(e_rwa[n] - full[n]).max()
            err_sw = np.abs(e_sw[n] - full[n]).max()
            checks[f"g={g} N={n}"] = (err_sw < err_rwa, f"corrected {err_sw:.2e} vs rwa {err_rwa:.2e}")
    elapsed = time.perf_counter() - start
    checks["runtime"] = (elapsed < 60, f"{elapsed:.1f} s")
    report(3, "second-order correction", checks, elapsed)


# --------------------------------------------------------------------------
# 4. mean-field phase boundaries


def _reference_delta_alpha(alphas, deltas):
    ref = np.empty((len(alphas), len(deltas)), dtype=object)
    for i, a in enumerate(alphas):
        m = LatticeModel(alpha=a)
        lo = analytic_boundary(Boundary.PSF_ONSET_DELTA, 1.0, 2.0, m)
        hi = analytic_boundary(Boundary.MOTT_DELTA, 1.0, 2.0, m)
        for j, d in enumerate(deltas):
            ref[i, j] = "PSF" if d < lo else ("MI" if d > hi else "SF")
    return ref


def _reference_pair_alpha(alphas, pairs, delta):
    ref = np.empty((len(alphas), len(pairs)), dtype=object)
    for i, a in enumerate(alphas):
        for j, p in enumerate(pairs):
            m = LatticeModel(alpha=a, p_hop=p, delta=delta)
            if a < analytic_boundary(Boundary.MOTT_RECT_ALPHA, 1.0, 2.0, m):
                ref[i, j] = "PSF" if p > analytic_boundary(Boundary.MOTT_RECT_P, 1.0, 2.0, m) else "MI"
            else:
                ref[i, j] = "PSF" if p > analytic_boundary(Boundary.SF_PSF_PCRIT, 1.0, 2.0, m) else "SF"
    return ref


def _reference_pair_checkerboard(xs, ys):
    # x = dW2^2 / P and y = (Delta - z dW1^2) / (z P) at J = 0
    ref = np.empty((len(xs), len(ys)), dtype=object)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if x < 2.0:
                ref[i, j] = "PSF" if y < 0.5 - 0.25 * x else "MI"
            else:
                ref[i, j] = "PCB" if y < 0.0 else "MI"
    return ref


def test_mean_field_boundaries():
    start = time.perf_counter()
    checks = {}
    alphas = np.linspace(0.0, 2.0, 33)

    deltas = np.linspace(-30.0, 30.0, 33)
    pd = phase_diagram_scan({"alpha": alphas, "delta": deltas}, 1.0, 2.0, LatticeModel())
    bad = boundary_mismatches(pd.labels, _reference_delta_alpha(alphas, deltas))
    checks["alpha-delta scan"] = (not bad and not pd.errors, f"{len(bad)} mismatched edges")

    pairs = np.linspace(0.0, 20.0, 33)
    pd = phase_diagram_scan({"alpha": alphas, "p_hop": pairs}, 1.0, 2.0, LatticeModel(delta=5.0))
    bad = boundary_mismatches(pd.labels, _reference_pair_alpha(alphas, pairs, 5.0))
    checks["alpha-P scan"] = (not bad and not pd.errors, f"{len(bad)} mismatched edges")

    xs, ys = np.linspace(-4.0, 6.0, 33), np.linspace(-1.5, 1.5, 33)
    pd = phase_diagram_scan({"dw2sq_over_p": xs, "delta_w_over_zp": ys}, 1.0, 2.0,
                            LatticeModel(j_hop=0.0, p_hop=1.0), ansatz="bipartite")
    bad = boundary_mismatches(pd.labels, _reference_pair_checkerboard(xs, ys))
    where = sorted({(round(float(xs[i]), 2), round(float(ys[j]), 2)) for (i, j), _ in bad})[:4]
    checks["checkerboard scan"] = (not bad and not pd.errors, f"{len(bad)} mismatched edges, e.g. at {where}")

    mott = analytic_boundary(Boundary.MOTT_DELTA, 1.0, 2.0, LatticeModel(alpha=1.0))
    checks["Mott spot value"] = (abs(mott - 11.657) < 5e-4, f"{mott:.4f}")
    crit = analytic_boundary(Boundary.SF_PSF_PCRIT, 1.0, 2.0, LatticeModel(alpha=0.0, delta=0.0))
    checks["P_crit spot value"] = (abs(crit - 1.0) < 1e-12, f"{crit:.6f}")
    elapsed = time.perf_counter() - start
    checks["runtime"] = (elapsed < 120, f"{elapsed:.1f} s")
    report(4, "mean-field phase boundaries", checks, elapsed)


# --------------------------------------------------------------------------
# 5. exact-diagonalisation oracles


def _ring_ground_state(n_sites, n, **params):
    basis = build_sector_basis(n_sites, n)
    return ground_state(build_hamiltonian(chain_model(n_sites, periodic=True, **params), basis), basis)


def test_exact_diagonalisation_oracles():
    checks = {}
    worst = 0.0
    for delta in np.linspace(-6.0, 2.0, 20):
        gs = _ring_ground_state(12, 4, alpha=0.0, delta=delta)
        worst = max(worst, abs(gs.energy - alpha0_ground_sector(4, 12, delta).energy))
    checks["alpha=0 closed form"] = (worst <= 1e-10, f"max deviation {worst:.1e}")

    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(25):
        n_sites = int(rng.integers(3, 7))
        n = int(rng.integers(1, 5))
        model = chain_model(n_sites, periodic=bool(rng.integers(2)), j_hop=rng.uniform(-1.5, 1.5),
                            alpha=rng.uniform(0, 2), p_hop=rng.uniform(-2, 2), delta=rng.uniform(-4, 4),
                            dw1=rng.uniform(-1, 1), dw2=rng.uniform(-1, 1), w0=rng.uniform(-0.5, 0.5),
                            w_sign=int(rng.choice([-1, 1])))
        basis = build_sector_basis(n_sites, n)
        h = build_hamiltonian(model, basis)
        dense = ground_state(h, basis, method="dense").energy
        sparse_e = ground_state(h, basis, method="lanczos").energy
        worst = max(worst, abs(dense - sparse_e))
    checks["dense vs Lanczos"] = (worst <= 1e-10, f"max deviation {worst:.1e}")

    for n, delta in ((4, -3.4), (6, -3.3)):
        sector = alpha0_ground_sector(n, 12, delta)
        c = correlators(_ring_ground_state(12, n, alpha=0.0, delta=delta).state)
        expected = np.maximum(sector.n_pairs - c.r, 0)
        dev = float(np.abs(c.pair_corr - expected).max())
        checks[f"pair cluster N={n}"] = (dev < 1e-10 and sector.n_pairs > 0,
                                         f"Np*={sector.n_pairs}, deviation {dev:.1e}")
    report(5, "exact-diagonalisation oracles", checks)


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get("FLUXQUTRIT_STRETCH"), reason="set FLUXQUTRIT_STRETCH=1 for the L=24 run")
def test_pair_cluster_full_size():
    start = time.perf_counter()
    gs = _ring_ground_state(24, 8, alpha=0.0, delta=-3.7)
    c = correlators(gs.state)
    got = c.pair_corr[:4]
    ok = np.allclose(got, [3, 2, 1, 0], atol=1e-8)
    report("5 (stretch)", "L=24 pair cluster", {"pair correlator": (ok, np.array2string(got, precision=6))},
           time.perf_counter() - start)


# --------------------------------------------------------------------------
# 6. dynamics


LIGHT_CONE_THRESHOLD = 1e-3
LIGHT_CONE_OFFSET = 3


def _outside_cone(density, times, centre, v):
    dist = np.abs(np.arange(density.shape[1]) - centre)
    return max(d[dist > v * t + LIGHT_CONE_OFFSET].max(initial=0.0) for d, t in zip(density, times))


def _free_particle_density(n_sites, occupation, times):
    """Independent-particle densities from the exact single-particle propagator."""
    hop = -(np.eye(n_sites, k=1) + np.eye(n_sites, k=-1))
    w, v = np.linalg.eigh(hop)
    n0 = np.asarray(occupation, dtype=float)
    return np.array([np.abs(v @ np.diag(np.exp(-1j * w * t)) @ v.T) ** 2 @ n0 for t in times])


def _calibrated_velocity(density, times, centre):
    """Smallest cone velocity whose outside density stays below the threshold."""
    lo, hi = 0.0, 10.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if _outside_cone(density, times, centre, mid) < LIGHT_CONE_THRESHOLD:
            hi = mid
        else:
            lo = mid
    return hi


def _first_arrival(pair_density, times, sites, level=0.05):
    above = pair_density[:, sites].max(axis=1) > level
    return times[np.argmax(above)] if above.any() else math.inf


def test_dynamics():
    start = time.perf_counter()
    checks = {}
    n_sites, centre = 13, 6
    occ = initial_occupation(n_sites, [1, 2, 1])
    basis = build_sector_basis(n_sites, 4)
    psi0 = SectorState.fock(basis, occ)
    times = np.linspace(0.0, 5.0, 251)

    runs = {}
    for name, params in (("SF", {}), ("PSF", {"p_hop": 3.0})):
        h = build_hamiltonian(chain_model(n_sites, **params), basis)
        runs[name] = traj = time_evolve(psi0, h, times)
        drift = max(np.abs(traj.norm - 1).max(), np.abs(traj.number - 4).max())
        checks[f"{name} conservation"] = (drift <= 1e-8, f"{drift:.1e}")

    small = build_sector_basis(3, 1)
    traj = time_evolve(SectorState.fock(small, (1, 0, 0)), build_hamiltonian(chain_model(3), small), times)
    hop = -(np.eye(3, k=1) + np.eye(3, k=-1))
    w, v = np.linalg.eigh(hop)
    worst = max(np.abs(np.abs(v @ (np.exp(-1j * w * t) * v[0])) ** 2 - d).max() for t, d in zip(times, traj.density))
    checks["three-site propagator"] = (worst <= 1e-9, f"{worst:.1e}")

    free = _free_particle_density(n_sites, occ, times)
    v_cal = _calibrated_velocity(free, times, centre)
    leak = _outside_cone(runs["SF"].density, times, centre, v_cal)
    checks["SF light cone"] = (leak < LIGHT_CONE_THRESHOLD,
                               f"outside density {leak:.2e} at v={v_cal:.3f} J (free particles {LIGHT_CONE_THRESHOLD:.0e})")

    far = [centre - 4, centre + 4]
    t_sf = _first_arrival(runs["SF"].pair_density, times, far)
    t_psf = _first_arrival(runs["PSF"].pair_density, times, far)
    checks["pair spreading"] = (t_psf < t_sf, f"PSF {t_psf:.2f} vs SF {t_sf:.2f}")
    elapsed = time.perf_counter() - start
    checks["runtime"] = (elapsed < 300, f"{elapsed:.1f} s")
    report(6, "dynamics", checks, elapsed)


# --------------------------------------------------------------------------
# 7. gauge equivalence


def test_gauge_equivalence():
    rng = np.random.default_rng(3)
    checks = {}
    instances = [(chain_model(4, periodic=True), 3), (chain_model(6, periodic=True), 4),
                 (chain_model(5), 3), (LatticeModel(n_sites=6, bonds=square_bonds(2, 3)), 3)]
    worst = 0.0
    for template, n in instances:
        for _ in range(3):
            model = template.with_params(j_hop=rng.uniform(-1.5, 1.5), alpha=rng.uniform(0, 2),
                                         p_hop=rng.uniform(-2, 2), delta=rng.uniform(-4, 4),
                                         dw1=rng.uniform(-1, 1), dw2=rng.uniform(-1, 1))
            r = sublattice_gauge_check(model, n)
            worst = max(worst, r.hop_sign_deviation, r.pair_sign_deviation, r.hop_map_residual, r.pair_map_residual)
    checks["bipartite spectra"] = (worst <= 1e-10, f"max deviation {worst:.1e}")
    try:
        sublattice_gauge_check(chain_model(5, periodic=True), 2)
        checks["odd ring rejected"] = (False, "accepted")
    except PreconditionError:
        checks["odd ring rejected"] = (True, "")
    report(7, "gauge equivalence", checks)


# --------------------------------------------------------------------------
# 8. ground-state regimes at reduced size


def test_ground_state_regimes():
    checks = {}
    c = correlators(_ring_ground_state(10, 10, delta=20.0).state)
    dev = float(np.abs(c.nn[1:] - 1.0).max())
    checks["MI density correlations"] = (dev < 5e-2, f"max |nn - 1| = {dev:.3f}")

    c = correlators(_ring_ground_state(12, 4, p_hop=10.0).state)
    checks["PSF pair coherence"] = (c.g1_pair[1] > 10 * c.g1[1],
                                    f"g1_pair(1) = {c.g1_pair[1]:.4f}, g1(1) = {c.g1[1]:.4f}")

    n = 4 / 12
    # density correlator normalised by the filling, so it tends to n without clustering
    cl = correlators(_ring_ground_state(12, 4, alpha=1.5).state).nn[-1] / n
    sf = correlators(_ring_ground_state(12, 4, alpha=1.0).state).nn[-1] / n
    checks["CL decay"] = (cl < 0.5 * n, f"{cl:.3f} vs {0.5 * n:.3f}")
    checks["SF plateau"] = (sf > 0.5 * n, f"{sf:.3f} vs {0.5 * n:.3f}")
    report(8, "ground-state regimes", checks)
