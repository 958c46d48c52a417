"""Gauge-equivalence and pair-addition stability checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..effective import LatticeModel
from ..errors import PreconditionError, ValidationError
from .basis import build_sector_basis
from .hamiltonian import build_hamiltonian
from .solvers import ground_state


@dataclass(frozen=True)
class GaugeReport:
    sublattice: tuple
    hop_sign_deviation: float
    pair_sign_deviation: float
    hop_map_residual: float
    pair_map_residual: float

    def passed(self, tol: float = 1e-10) -> bool:
        return max(self.hop_sign_deviation, self.pair_sign_deviation,
                   self.hop_map_residual, self.pair_map_residual) <= tol


def _spectrum(model, basis):
    return np.linalg.eigvalsh(build_hamiltonian(model, basis).toarray())


def sublattice_gauge_check(model: LatticeModel, n_particles: int, max_dimension: int = 4000) -> GaugeReport:
    """Compare H(J) with H(-J), and H(P) with H(-P) at J = 0.

    On a bipartite graph b_j -> s_j b_j with s = -1 (or i) on one sublattice
    flips the sign of J (or of P when J = 0). Both the spectra and the
    transformed matrices are compared.
    """
    coloring = model.sublattice_coloring()
    if coloring is None:
        raise PreconditionError("bond graph is not bipartite")
    basis = build_sector_basis(model.n_sites, n_particles)
    if basis.dimension > max_dimension:
        raise ValidationError("sector too large for dense comparison")
    on_b = basis.occupations[:, np.array(coloring, dtype=bool)].sum(axis=1).astype(np.int64)

    h_plus = build_hamiltonian(model, basis).toarray()
    h_minus = build_hamiltonian(model.with_params(j_hop=-model.j_hop), basis).toarray()
    u = np.where(on_b % 2 == 0, 1.0, -1.0)
    hop_map = np.abs(u[:, None] * h_plus * u[None, :] - h_minus).max(initial=0.0)
    hop_dev = np.abs(np.linalg.eigvalsh(h_plus) - np.linalg.eigvalsh(h_minus)).max()

    pair_model = model.with_params(j_hop=0.0)
    hp = build_hamiltonian(pair_model, basis).toarray()
    hm = build_hamiltonian(pair_model.with_params(p_hop=-model.p_hop), basis).toarray()
    phase = 1j ** on_b
    pair_map = np.abs(phase.conj()[:, None] * hp * phase[None, :] - hm).max(initial=0.0)
    pair_dev = np.abs(np.linalg.eigvalsh(hp) - np.linalg.eigvalsh(hm)).max()
    return GaugeReport(tuple(coloring), float(hop_dev), float(pair_dev), float(hop_map), float(pair_map))


def stability_check(model: LatticeModel, n_particles: int, seed: int = 0) -> float:
    """E(N+2) + E(N-2) - 2 E(N); negative values signal pair-addition instability."""
    L = model.n_sites
    if n_particles - 2 < 0 or n_particles + 2 > 2 * L:
        raise ValidationError("N - 2 and N + 2 must both lie in [0, 2L]")
    energies = {}
    for n in (n_particles - 2, n_particles, n_particles + 2):
        basis = build_sector_basis(L, n)
        energies[n] = ground_state(build_hamiltonian(model, basis), basis, seed=seed).energy
    return energies[n_particles + 2] + energies[n_particles - 2] - 2 * energies[n_particles]
