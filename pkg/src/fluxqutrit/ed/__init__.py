"""Exact diagonalisation of the two-boson-per-site lattice model."""

from .alpha0 import Alpha0Sector, alpha0_ground_sector, exact_alpha0_energy, open_chain_fermion_energy, ring_fermion_energy
from .basis import SectorBasis, SectorState, build_sector_basis, sector_dimension
from .checks import GaugeReport, stability_check, sublattice_gauge_check
from .hamiltonian import build_hamiltonian
from .observables import Correlators, correlators
from .solvers import GroundState, Trajectory, ground_state, time_evolve

__all__ = [
    "Alpha0Sector", "alpha0_ground_sector", "exact_alpha0_energy", "open_chain_fermion_energy",
    "ring_fermion_energy", "SectorBasis", "SectorState", "build_sector_basis", "sector_dimension",
    "GaugeReport", "stability_check", "sublattice_gauge_check", "build_hamiltonian", "Correlators",
    "correlators", "GroundState", "Trajectory", "ground_state", "time_evolve",
]
