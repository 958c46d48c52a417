"""Closed-form energies at vanishing correlated hopping (alpha = 0).

At alpha = 0 a doubly occupied site cannot exchange bosons with its
neighbours, so pairs are frozen and the single bosons form a hard-core
(free-fermion) gas in the remaining sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


def ring_fermion_energy(n_particles: int, n_sites: int, j_hop: float = 1.0) -> float:
    """Hard-core bosons on a ring: -2J sum cos(2 pi k / L) over half-integer k for even N."""
    if n_particles == 0:
        return 0.0
    if n_particles % 2:
        raise ValidationError("ring formula needs an even number of particles")
    k = np.arange(n_particles) - (n_particles - 1) / 2.0
    return float(-2.0 * j_hop * np.sum(np.cos(2.0 * np.pi * k / n_sites)))


def open_chain_fermion_energy(n_particles: int, n_sites: int, j_hop: float = 1.0) -> float:
    """Hard-core bosons on an open chain: the N lowest standing waves."""
    if n_particles > n_sites:
        raise ValidationError("more hard-core particles than sites")
    k = np.arange(1, n_particles + 1)
    return float(-2.0 * j_hop * np.sum(np.cos(np.pi * k / (n_sites + 1))))


def exact_alpha0_energy(n_particles: int, n_pairs: int, n_sites: int, delta: float, j_hop: float = 1.0) -> float:
    """Lowest energy on a ring with ``n_pairs`` frozen pairs gathered in one block."""
    if n_particles % 2:
        raise ValidationError("N must be even")
    if not 0 <= n_pairs <= n_particles // 2:
        raise ValidationError("pair count out of range")
    if n_pairs == 0:
        return ring_fermion_energy(n_particles, n_sites, j_hop)
    movers = n_particles - 2 * n_pairs
    free = n_sites - n_pairs
    if movers > free:
        raise ValidationError("not enough free sites")
    return delta * n_pairs + open_chain_fermion_energy(movers, free, j_hop)


@dataclass(frozen=True)
class Alpha0Sector:
    n_pairs: int
    energy: float
    delta1: float
    delta2: float
    delta1_limit: float
    delta2_limit: float


def alpha0_ground_sector(n_particles: int, n_sites: int, delta: float, j_hop: float = 1.0) -> Alpha0Sector:
    """Optimal pair number and the interaction window (delta1, delta2) of partial pairing.

    Below ``delta1`` every boson is paired; above ``delta2`` none is.
    """
    energies = {}
    for p in range(n_particles // 2 + 1):
        try:
            energies[p] = exact_alpha0_energy(n_particles, p, n_sites, delta, j_hop)
        except ValidationError:
            continue
    best = min(energies, key=lambda p: (energies[p], p))
    half = n_particles // 2
    delta1 = open_chain_fermion_energy(2, n_sites - half + 1, j_hop)
    delta2 = ring_fermion_energy(n_particles, n_sites, j_hop) - open_chain_fermion_energy(
        n_particles - 2, n_sites - 1, j_hop
    )
    return Alpha0Sector(
        n_pairs=best,
        energy=energies[best],
        delta1=delta1,
        delta2=delta2,
        delta1_limit=-4.0 * j_hop,
        delta2_limit=-j_hop * (1.0 + 3.0 * math.cos(math.pi * n_particles / n_sites)),
    )
