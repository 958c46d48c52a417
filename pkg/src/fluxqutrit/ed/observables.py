"""Equal-time correlation functions of sector states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SectorState


@dataclass(frozen=True)
class Correlators:
    """Correlations at distance r from a reference site.

    ``pair_corr`` is L <n_p(0) n_p(r)> with n_p = (b^+)^2 b^2 / 2.
    """

    r: np.ndarray
    g1: np.ndarray
    g1_pair: np.ndarray
    nn: np.ndarray
    pair_corr: np.ndarray
    mean_pair_number: float

    def rows(self):
        for k, r in enumerate(self.r):
            yield int(r), float(self.g1[k]), float(self.g1_pair[k]), float(self.nn[k]), float(self.pair_corr[k])


def _transfer(state: SectorState, src_site: int, dst_site: int, count: int):
    """<psi| (b_dst^+)^count (b_src)^count |psi> for src != dst, count in {1, 2}."""
    basis = state.basis
    occ = basis.occupations
    ns = occ[:, src_site].astype(np.int64)
    nd = occ[:, dst_site].astype(np.int64)
    psi = state.amplitudes
    if count == 1:
        src = np.flatnonzero((ns > 0) & (nd < 2))
        amp = np.sqrt(ns[src] * (nd[src] + 1.0))
        shift = basis.site_weights()[dst_site] - basis.site_weights()[src_site]
    else:
        src = np.flatnonzero((ns == 2) & (nd == 0))
        amp = np.full(src.size, 2.0)
        shift = 2 * (basis.site_weights()[dst_site] - basis.site_weights()[src_site])
    if src.size == 0:
        return 0.0
    dst = basis.lookup(basis.codes[src] + shift)
    return complex(np.sum(psi[dst].conj() * amp * psi[src]))


def correlators(state: SectorState, periodic: bool = True, reference_site: int = 0, average: bool = True) -> Correlators:
    """Single-particle, pair, density and pair-density correlations versus distance.

    On rings the values are averaged over all reference sites (unless
    ``average`` is False); on open chains they are measured from
    ``reference_site``.
    """
    state = state.normalized()
    basis = state.basis
    L = basis.n_sites
    prob = np.abs(state.amplitudes) ** 2
    occ = basis.occupations.astype(float)
    is_pair = (basis.occupations == 2).astype(float)

    if periodic:
        distances = np.arange(L // 2 + 1)
        refs = range(L) if average else [reference_site]
    else:
        distances = np.arange(L - reference_site)
        refs = [reference_site]

    g1 = np.zeros(len(distances))
    g1p = np.zeros(len(distances))
    nn = np.zeros(len(distances))
    pc = np.zeros(len(distances))
    for k, r in enumerate(distances):
        for ref in refs:
            other = (ref + r) % L
            if r == 0:
                g1[k] += prob @ occ[:, ref]
                g1p[k] += 2.0 * (prob @ is_pair[:, ref])
            else:
                g1[k] += _transfer(state, ref, other, 1).real
                g1p[k] += _transfer(state, ref, other, 2).real
            nn[k] += prob @ (occ[:, ref] * occ[:, other])
            pc[k] += L * (prob @ (is_pair[:, ref] * is_pair[:, other]))
    norm = len(refs)
    return Correlators(
        r=distances,
        g1=g1 / norm,
        g1_pair=g1p / norm,
        nn=nn / norm,
        pair_corr=pc / norm,
        mean_pair_number=float(prob @ is_pair.sum(axis=1)),
    )
