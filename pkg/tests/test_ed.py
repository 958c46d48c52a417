import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from fluxqutrit.effective import LatticeModel, chain_bonds, chain_model, square_bonds
from fluxqutrit.ed import (
    SectorBasis,
    SectorState,
    alpha0_ground_sector,
    build_hamiltonian,
    build_sector_basis,
    correlators,
    exact_alpha0_energy,
    ground_state,
    open_chain_fermion_energy,
    ring_fermion_energy,
    sector_dimension,
    stability_check,
    sublattice_gauge_check,
    time_evolve,
)
from fluxqutrit.errors import PreconditionError, ValidationError
from oracles import fock_hamiltonian, fock_sector


# --------------------------------------------------------------------------
# basis


@given(st.integers(1, 7), st.data())
def test_sector_dimension_counts_configurations(n_sites, data):
    n = data.draw(st.integers(0, 2 * n_sites))
    brute = sum(1 for occ in itertools.product(range(3), repeat=n_sites) if sum(occ) == n)
    assert sector_dimension(n_sites, n) == brute
    assert build_sector_basis(n_sites, n).dimension == brute


def test_basis_order_and_lookup():
    basis = SectorBasis.build(5, 4)
    codes = basis.codes
    assert np.all(np.diff(codes) < 0)
    assert tuple(basis.occupations[0]) == (2, 2, 0, 0, 0)
    for k, occ in enumerate(basis.states):
        assert basis.index(occ) == k
    np.testing.assert_array_equal(basis.lookup(codes[::-1]), np.arange(basis.dimension)[::-1])
    with pytest.raises(ValueError):
        basis.occupations[0, 0] = 1


def test_lookup_rejects_foreign_states():
    basis = SectorBasis.build(4, 2)
    with pytest.raises(KeyError):
        basis.index((1, 1, 1, 0))
    with pytest.raises(KeyError):
        basis.index((1, 0, 0, 0))


def test_out_of_range_sectors():
    with pytest.raises(ValidationError):
        build_sector_basis(3, 7)


# --------------------------------------------------------------------------
# Hamiltonian


model_params = st.fixed_dictionaries({
    "j_hop": st.floats(-1.5, 1.5),
    "alpha": st.floats(0.0, 2.0),
    "p_hop": st.floats(-2.0, 2.0),
    "delta": st.floats(-4.0, 4.0),
    "dw1": st.floats(-1.0, 1.0),
    "dw2": st.floats(-1.0, 1.0),
    "w0": st.floats(-0.5, 0.5),
    "w_sign": st.sampled_from([-1, 1]),
})


@given(model_params, st.integers(2, 5), st.booleans(), st.data())
def test_hamiltonian_matches_fock_space_construction(params, n_sites, periodic, data):
    n = data.draw(st.integers(0, 2 * n_sites))
    bonds = chain_bonds(n_sites, periodic)
    model = LatticeModel(n_sites=n_sites, bonds=bonds, **params)
    basis = build_sector_basis(n_sites, n)
    h = build_hamiltonian(model, basis).toarray()
    full = fock_hamiltonian(n_sites, bonds, **params)
    keep, occ = fock_sector(n_sites, n)
    order = basis.lookup(occ @ basis.site_weights())
    ref = np.zeros_like(h)
    ref[np.ix_(order, order)] = full[np.ix_(keep, keep)]
    np.testing.assert_allclose(h, ref, atol=1e-13)


def test_two_site_pair_elements():
    model = chain_model(2, j_hop=1.0, alpha=1.0)
    basis = build_sector_basis(2, 2)
    h = build_hamiltonian(model, basis).toarray()
    # |2,0>, |1,1>, |0,2>
    np.testing.assert_allclose(h, -np.sqrt(2) * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]), atol=1e-15)
    assert ground_state(h, basis).energy == pytest.approx(-2.0, abs=1e-12)


def test_hamiltonian_on_square_plaquette_is_symmetric():
    model = LatticeModel(n_sites=6, bonds=square_bonds(2, 3), j_hop=0.8, alpha=1.4, p_hop=0.3, delta=-1.0)
    h = build_hamiltonian(model, build_sector_basis(6, 5))
    assert abs(h - h.T).max() == 0.0


def test_model_and_basis_sizes_must_agree():
    with pytest.raises(ValidationError):
        build_hamiltonian(chain_model(4), build_sector_basis(5, 2))


# --------------------------------------------------------------------------
# ground states


@settings(max_examples=10)
@given(model_params, st.integers(4, 6), st.integers(2, 4), st.integers(0, 2**16))
def test_lanczos_agrees_with_dense(params, n_sites, n, seed):
    model = chain_model(n_sites, periodic=True, **params)
    basis = build_sector_basis(n_sites, n)
    h = build_hamiltonian(model, basis)
    dense = ground_state(h, basis, method="dense")
    sparse_gs = ground_state(h, basis, method="lanczos", seed=seed)
    assert sparse_gs.energy == pytest.approx(dense.energy, abs=1e-10)
    assert sparse_gs.residual < 1e-8


def test_ground_state_sign_and_degeneracy_are_reported():
    model = chain_model(6, periodic=True, alpha=0.0, delta=20.0)
    basis = build_sector_basis(6, 2)
    gs = ground_state(build_hamiltonian(model, basis), basis)
    assert gs.state.amplitudes[np.argmax(np.abs(gs.state.amplitudes))] > 0
    assert gs.degeneracy >= 1


@pytest.mark.parametrize("delta", [-4.0, -2.5, -1.0, 0.5])
def test_alpha0_ring_matches_closed_form(delta):
    L, N = 8, 4
    basis = build_sector_basis(L, N)
    gs = ground_state(build_hamiltonian(chain_model(L, periodic=True, alpha=0.0, delta=delta), basis), basis)
    sector = alpha0_ground_sector(N, L, delta)
    assert gs.energy == pytest.approx(sector.energy, abs=1e-10)
    if gs.degeneracy == 1:
        c = correlators(gs.state)
        assert c.mean_pair_number == pytest.approx(round(c.mean_pair_number), abs=1e-10)
        assert round(c.mean_pair_number) == sector.n_pairs


def test_free_fermion_sums():
    # L = 4 ring with 2 hard-core bosons: k = +-pi/4 -> -2 * 2 cos(pi/4)
    assert ring_fermion_energy(2, 4) == pytest.approx(-2 * np.sqrt(2), abs=1e-14)
    assert open_chain_fermion_energy(1, 1) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValidationError):
        ring_fermion_energy(3, 6)
    with pytest.raises(ValidationError):
        exact_alpha0_energy(4, 3, 8, -1.0)


def test_hard_core_limit_matches_free_fermions():
    L, N = 8, 4
    basis = build_sector_basis(L, N)
    model = chain_model(L, periodic=True, alpha=0.0, delta=1e3)
    assert ground_state(build_hamiltonian(model, basis), basis).energy == pytest.approx(
        ring_fermion_energy(N, L), abs=1e-10)


# --------------------------------------------------------------------------
# observables


def test_fock_state_correlators():
    basis = build_sector_basis(6, 6)
    state = SectorState.fock(basis, (1,) * 6)
    c = correlators(state)
    np.testing.assert_allclose(c.nn, 1.0)
    np.testing.assert_allclose(c.g1[1:], 0.0)
    assert c.g1[0] == pytest.approx(1.0)
    assert c.mean_pair_number == 0.0


def test_pair_fock_state_correlators():
    basis = build_sector_basis(4, 4)
    c = correlators(SectorState.fock(basis, (2, 0, 2, 0)), average=False)
    np.testing.assert_allclose(c.pair_corr, [4.0, 0.0, 4.0])
    np.testing.assert_allclose(c.g1_pair, [2.0, 0.0, 0.0])


def test_staggered_pair_coherence_for_negative_pair_hopping():
    basis = build_sector_basis(12, 4)

    def pair_coherence(p):
        h = build_hamiltonian(chain_model(12, periodic=True, p_hop=p), basis)
        return correlators(ground_state(h, basis).state).g1_pair

    uniform = pair_coherence(-1.8)
    staggered = pair_coherence(-2.0)
    assert np.all(uniform > 0)
    signs = np.sign(staggered[1:])
    assert np.all(signs == (-1.0) ** np.arange(1, len(staggered)))


# --------------------------------------------------------------------------
# time evolution


def test_single_particle_three_sites_matches_propagator():
    basis = build_sector_basis(3, 1)
    model = chain_model(3, j_hop=0.7)
    h = build_hamiltonian(model, basis)
    times = np.linspace(0, 6, 31)
    traj = time_evolve(SectorState.fock(basis, (1, 0, 0)), h, times)
    hop = -0.7 * (np.eye(3, k=1) + np.eye(3, k=-1))
    for t, dens in zip(times, traj.density):
        amp = expm(-1j * hop * t) @ np.array([1.0, 0, 0])
        np.testing.assert_allclose(dens, np.abs(amp) ** 2, atol=1e-12)


def test_krylov_agrees_with_dense_propagation():
    basis = build_sector_basis(7, 4)
    model = chain_model(7, alpha=1.3, p_hop=0.6, delta=-1.0, dw1=0.3, dw2=0.5)
    h = build_hamiltonian(model, basis)
    psi0 = SectorState.fock(basis, (0, 0, 1, 2, 1, 0, 0))
    times = np.linspace(0, 4, 9)
    dense = time_evolve(psi0, h, times, method="dense")
    krylov = time_evolve(psi0, h, times, method="krylov")
    np.testing.assert_allclose(krylov.density, dense.density, atol=1e-8)
    np.testing.assert_allclose(krylov.pair_density, dense.pair_density, atol=1e-8)
    np.testing.assert_allclose(krylov.norm, 1.0, atol=1e-10)


def test_trajectory_conserves_norm_and_number():
    basis = build_sector_basis(8, 4)
    h = build_hamiltonian(chain_model(8, alpha=2.0), basis)
    traj = time_evolve(SectorState.fock(basis, (0, 0, 0, 2, 2, 0, 0, 0)), h, np.linspace(0, 5, 11))
    np.testing.assert_allclose(traj.norm, 1.0, atol=1e-12)
    np.testing.assert_allclose(traj.number, 4.0, atol=1e-10)
    np.testing.assert_allclose(traj.density.sum(axis=1), 4.0, atol=1e-10)


def test_times_must_ascend():
    basis = build_sector_basis(3, 1)
    h = build_hamiltonian(chain_model(3), basis)
    with pytest.raises(ValidationError):
        time_evolve(SectorState.fock(basis, (1, 0, 0)), h, [1.0, 0.5])


# --------------------------------------------------------------------------
# gauge and stability checks


@settings(max_examples=10)
@given(model_params, st.sampled_from([(4, 3), (6, 4), (5, 3)]))
def test_sublattice_gauge_maps(params, size):
    n_sites, n = size
    periodic = n_sites % 2 == 0
    model = chain_model(n_sites, periodic=periodic, **params)
    report = sublattice_gauge_check(model, n)
    assert report.passed(1e-10)


def test_odd_ring_is_rejected():
    with pytest.raises(PreconditionError):
        sublattice_gauge_check(chain_model(5, periodic=True), 2)


def test_stability_needs_neighbouring_sectors():
    with pytest.raises(ValidationError):
        stability_check(chain_model(4), 1)
    with pytest.raises(ValidationError):
        stability_check(chain_model(4), 7)


def test_stability_signs():
    # hard-core bosons: energy is convex in N
    assert stability_check(chain_model(8, periodic=True, alpha=0.0, delta=1e3), 4) > 0
    # frozen pairs without hopping: energy linear in the pair number
    assert stability_check(chain_model(6, periodic=True, j_hop=0.0, delta=-1.0), 4) == pytest.approx(0.0, abs=1e-12)
