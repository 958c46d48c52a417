import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fluxqutrit.effective import (
    PHOTONS,
    CouplingSpec,
    DegeneracyWarning,
    LatticeModel,
    build_lattice_model,
    build_two_qutrit_rwa,
    chain_bonds,
    chain_model,
    extract_effective_params,
    full_two_atom_diagonalization,
    inverse_capacitance_row,
    qutrit_block_levels,
    schrieffer_wolff_correction,
    square_bonds,
    two_qutrit_lab_offset,
)
from fluxqutrit.errors import PreconditionError, ValidationError
from fluxqutrit.qutrit import LevelPolicy, extract_qutrit, resonant_spec
from fluxqutrit.spectra import CircuitSpec, diagonalize_fluxonium


@pytest.fixture(scope="module")
def pp_atom():
    spec = resonant_spec(CircuitSpec(0.6, 2.2, 1.5, 0.413), LevelPolicy.LOWEST_THREE, 0.413)
    sp = diagonalize_fluxonium(spec, n_levels=16)
    return sp, extract_qutrit(sp)


@pytest.fixture(scope="module")
def fp_atom():
    spec = resonant_spec(CircuitSpec(0.6, 9.0, 1.5, 0.393), LevelPolicy.SKIP_SECOND, 0.393)
    sp = diagonalize_fluxonium(spec, n_levels=16)
    return sp, extract_qutrit(sp, LevelPolicy.SKIP_SECOND)


def test_rwa_matrix_conserves_photon_number(pp_atom):
    _, q = pp_atom
    h = build_two_qutrit_rwa(q, CouplingSpec(g_c=0.05, g_l=0.02))
    assert h.number_commutator_norm() == 0.0
    np.testing.assert_allclose(h.entries, h.entries.conj().T, atol=1e-15)


@pytest.mark.parametrize("g", [0.03, -0.07])
def test_capacitive_constants_agree_with_lattice_builder(pp_atom, g):
    _, q = pp_atom
    c = CouplingSpec(g_c=g)
    p = extract_effective_params(build_two_qutrit_rwa(q, c))
    lat = build_lattice_model(q, c, 4, chain_bonds(4))
    assert p.j_hop == pytest.approx(lat.j_hop, rel=1e-12)
    assert p.p_hop == pytest.approx(lat.p_hop, rel=1e-12)
    assert p.alpha == pytest.approx(q.alpha, rel=1e-10)
    assert p.alpha_prime == pytest.approx(q.alpha, rel=1e-10)
    assert p.p_hop / p.j_hop == pytest.approx(q.p_over_j_cap, rel=1e-10)
    # J and P carry the opposite sign of the coupling
    assert np.sign(p.j_hop) == -np.sign(g)
    assert abs(p.dw1_sq) < 1e-14


@pytest.mark.parametrize("g", [0.02, -0.02])
def test_inductive_bond_interaction_follows_coupling_sign(fp_atom, g):
    _, q = fp_atom
    c = CouplingSpec(g_l=g)
    p = extract_effective_params(build_two_qutrit_rwa(q, c))
    lat = build_lattice_model(q, c, 4, chain_bonds(4))
    assert p.j_hop == pytest.approx(lat.j_hop, rel=1e-12)
    assert p.dw1_sq == pytest.approx(lat.w_sign * lat.dw1**2, rel=1e-10)
    assert p.dw2_sq == pytest.approx(lat.w_sign * lat.dw2**2, rel=1e-10)
    assert np.sign(p.dw2_sq) == np.sign(g)
    assert p.w1 == pytest.approx(q.w1, rel=1e-8)
    assert p.w2 == pytest.approx(q.w2, rel=1e-8)


def test_lattice_builder_needs_single_channel(pp_atom):
    _, q = pp_atom
    with pytest.raises(PreconditionError):
        build_lattice_model(q, CouplingSpec(0.01, 0.01), 3, chain_bonds(3))


def test_rejects_non_hermitian_input():
    m = np.zeros((9, 9))
    m[0, 1] = 1.0
    with pytest.raises(ValidationError):
        extract_effective_params(m)


# --------------------------------------------------------------------------
# second-order correction


@given(scale=st.floats(0.2, 5.0))
def test_correction_is_quadratic_in_coupling(pp_atom, scale):
    sp, _ = pp_atom
    c = CouplingSpec(g_c=0.02)
    base = schrieffer_wolff_correction(sp, sp, c)
    scaled = schrieffer_wolff_correction(sp, sp, c.scaled(scale))
    assert np.abs(scaled - scale**2 * base).max() <= 1e-10 * np.abs(scale**2 * base).max()


def test_correction_is_hermitian_and_block_diagonal(pp_atom):
    sp, _ = pp_atom
    dh = schrieffer_wolff_correction(sp, sp, CouplingSpec(g_c=0.05, g_l=0.01))
    np.testing.assert_allclose(dh, dh.conj().T, atol=1e-16)
    off_block = PHOTONS[:, None] != PHOTONS[None, :]
    assert np.abs(dh[off_block]).max() == 0.0


def test_correction_reduces_error_against_full_pair(pp_atom):
    sp, q = pp_atom
    c = CouplingSpec(g_c=0.05)
    rwa = replace(build_two_qutrit_rwa(q, c), offset=two_qutrit_lab_offset(q, sp))
    corrected = rwa + schrieffer_wolff_correction(sp, sp, c)
    assert not corrected.rwa_only
    full = qutrit_block_levels(sp, sp, c)
    e_rwa, e_sw = rwa.block_eigenvalues(True), corrected.block_eigenvalues(True)
    for n in range(1, 5):
        assert np.abs(e_sw[n] - full[n]).max() < np.abs(e_rwa[n] - full[n]).max()


def test_large_exclusion_window_warns(pp_atom):
    sp, _ = pp_atom
    with pytest.warns(DegeneracyWarning):
        schrieffer_wolff_correction(sp, sp, CouplingSpec(g_c=0.05), resonance_tol=50.0)


def test_default_window_is_quiet(pp_atom):
    sp, _ = pp_atom
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegeneracyWarning)
        schrieffer_wolff_correction(sp, sp, CouplingSpec(g_c=0.05))


def test_uncoupled_pair_is_sum_of_atoms(pp_atom):
    sp, _ = pp_atom
    vals = full_two_atom_diagonalization(sp, sp, CouplingSpec(), keep=20)
    sums = np.sort((sp.energies[:12, None] + sp.energies[None, :12]).ravel())[:20]
    np.testing.assert_allclose(vals, sums, atol=1e-12)


# --------------------------------------------------------------------------
# capacitance network


@given(st.floats(0.01, 0.4), st.integers(0, 6))
def test_inverse_capacitance_matches_matrix_inverse(ratio, r):
    c_q, size = 1.0, 161
    c_c = ratio * c_q
    cap = np.diag(np.full(size, c_q + 2 * c_c)) - c_c * (np.eye(size, k=1) + np.eye(size, k=-1))
    mid = size // 2
    ref = np.linalg.inv(cap)[mid, mid + r]
    assert inverse_capacitance_row(c_q, c_c, r) == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_inverse_capacitance_validation():
    with pytest.raises(ValidationError):
        inverse_capacitance_row(1.0, 0.6, 0)


# --------------------------------------------------------------------------
# lattice geometry


def test_bipartite_colorings():
    assert chain_model(6, periodic=True).bipartite
    assert not chain_model(5, periodic=True).bipartite
    assert chain_model(5).bipartite
    lat = LatticeModel(n_sites=6, bonds=square_bonds(2, 3))
    coloring = lat.sublattice_coloring()
    assert all(coloring[i] != coloring[j] for i, j in lat.bonds)


def test_coordination():
    assert chain_model(8, periodic=True).coordination == pytest.approx(2.0)
    assert LatticeModel(n_sites=16, bonds=square_bonds(4, 4, periodic=True)).coordination == pytest.approx(4.0)


def test_model_validation():
    with pytest.raises(ValidationError):
        LatticeModel(n_sites=3, bonds=((0, 3),))
    with pytest.raises(ValidationError):
        LatticeModel(n_sites=3, bonds=((0, 1),), w_sign=0)
