"""Fixed-particle-number bases with at most two bosons per site."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from ..errors import ValidationError


def sector_dimension(n_sites: int, n_particles: int) -> int:
    """Number of occupation strings in {0,1,2}^L summing to N (p counts doubly occupied sites)."""
    return sum(
        comb(n_sites, p) * comb(n_sites - p, n_particles - 2 * p)
        for p in range(n_particles // 2 + 1)
        if n_particles - 2 * p <= n_sites - p
    )


def _enumerate_codes(n_sites: int, n_particles: int) -> np.ndarray:
    """Base-3 codes of all admissible strings (site 0 is the most significant digit)."""
    codes = np.zeros(1, dtype=np.int64)
    counts = np.zeros(1, dtype=np.int64)
    for site in range(n_sites):
        remaining = n_sites - site - 1
        parts_c, parts_n = [], []
        for occ in (0, 1, 2):
            new = counts + occ
            keep = (new <= n_particles) & (n_particles - new <= 2 * remaining)
            parts_c.append(codes[keep] * 3 + occ)
            parts_n.append(new[keep])
        codes = np.concatenate(parts_c)
        counts = np.concatenate(parts_n)
    return np.sort(codes)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """All constrained occupation strings with N particles on L sites.

    States are ordered lexicographically from the largest string down, e.g.
    (2,0), (1,1), (0,2). Lookup bisects the sorted base-3 codes.
    """

    n_sites: int
    n_particles: int
    codes: np.ndarray = field(repr=False)
    occupations: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n_sites: int, n_particles: int) -> "SectorBasis":
        if n_sites < 1:
            raise ValidationError("need at least one site")
        if not 0 <= n_particles <= 2 * n_sites:
            raise ValidationError(f"sector N={n_particles} is empty on {n_sites} sites")
        asc = _enumerate_codes(n_sites, n_particles)
        codes = asc[::-1].copy()
        occ = np.empty((len(codes), n_sites), dtype=np.uint8)
        rest = codes.copy()
        for site in range(n_sites - 1, -1, -1):
            rest, digit = np.divmod(rest, 3)
            occ[:, site] = digit
        codes.setflags(write=False)
        occ.setflags(write=False)
        return cls(n_sites, n_particles, codes, occ)

    @property
    def dimension(self) -> int:
        return len(self.codes)

    def __len__(self):
        return self.dimension

    @property
    def states(self):
        return [tuple(int(x) for x in row) for row in self.occupations]

    def site_weights(self) -> np.ndarray:
        """3**(L-1-j): change of the code when site j gains one boson."""
        return 3 ** np.arange(self.n_sites - 1, -1, -1, dtype=np.int64)

    def code_of(self, occupation) -> int:
        occ = np.asarray(occupation, dtype=np.int64)
        if occ.shape != (self.n_sites,) or occ.min() < 0 or occ.max() > 2:
            raise ValidationError(f"invalid occupation string {occupation}")
        return int(occ @ self.site_weights())

    def lookup(self, codes) -> np.ndarray:
        """Positions of the given codes (all must belong to the basis)."""
        codes = np.asarray(codes, dtype=np.int64)
        asc = self.codes[::-1]
        pos = np.searchsorted(asc, codes)
        return self.dimension - 1 - pos

    def index(self, occupation) -> int:
        occ = tuple(occupation)
        if sum(occ) != self.n_particles:
            raise KeyError(occ)
        code = self.code_of(occ)
        i = int(self.lookup([code])[0])
        if not (0 <= i < self.dimension and self.codes[i] == code):
            raise KeyError(occ)
        return i


def build_sector_basis(n_sites: int, n_particles: int) -> SectorBasis:
    return SectorBasis.build(n_sites, n_particles)


@dataclass(eq=False)
class SectorState:
    """Amplitude vector over a sector basis."""

    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dimension,):
            raise ValidationError("amplitude vector does not match the basis")

    @classmethod
    def fock(cls, basis: SectorBasis, occupation) -> "SectorState":
        vec = np.zeros(basis.dimension, dtype=complex)
        vec[basis.index(occupation)] = 1.0
        return cls(basis, vec)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "SectorState":
        return SectorState(self.basis, self.amplitudes / self.norm)

    def density(self) -> np.ndarray:
        """<n_j> for every site."""
        prob = np.abs(self.amplitudes) ** 2
        return prob @ self.basis.occupations.astype(float)

    def pair_density(self) -> np.ndarray:
        """<n_j (n_j - 1)> for every site."""
        prob = np.abs(self.amplitudes) ** 2
        return 2.0 * (prob @ (self.basis.occupations == 2).astype(float))
