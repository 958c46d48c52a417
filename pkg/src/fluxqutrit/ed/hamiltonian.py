"""Sparse Hamiltonian of the constrained Bose-Hubbard chain in one particle-number sector."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from ..effective import LatticeModel
from ..errors import ValidationError
from .basis import SectorBasis


def _w_values(model: LatticeModel) -> np.ndarray:
    return np.array([model.w0, model.w0 + model.dw1, model.w0 + model.dw2])


def _directed_bonds(model: LatticeModel):
    for i, j in model.bonds:
        yield i, j
        yield j, i


def build_hamiltonian(model: LatticeModel, basis: SectorBasis) -> sparse.csr_matrix:
    """Real symmetric CSR matrix of the lattice model on ``basis``."""
    if model.n_sites != basis.n_sites:
        raise ValidationError("model and basis disagree on the number of sites")
    occ = basis.occupations
    dim = basis.dimension
    weights = basis.site_weights()
    itype = np.int32 if dim < 2**31 - 1 else np.int64
    rows, cols, vals = [], [], []

    diag = model.delta * (occ == 2).sum(axis=1).astype(float)  # (delta/2) n (n - 1)
    w = _w_values(model)
    if np.any(w):
        for i, j in model.bonds:
            diag += model.w_sign * w[occ[:, i]] * w[occ[:, j]]
    rows.append(np.arange(dim, dtype=itype))
    cols.append(np.arange(dim, dtype=itype))
    vals.append(diag)

    for i, j in _directed_bonds(model):
        ni = occ[:, i].astype(np.int64)
        nj = occ[:, j].astype(np.int64)
        if model.j_hop:
            # one boson from site j to site i
            movable = (ni < 2) & (nj > 0)
            if model.alpha == 0.0:
                movable &= ni + nj == 1  # only 1 -> 0 moves survive
            src = np.flatnonzero(movable)
            if src.size:
                amp = -model.j_hop * np.power(model.alpha, ni[src] + nj[src] - 1.0)
                amp = amp * np.sqrt(ni[src] + 1.0) * np.sqrt(nj[src])
                dst = basis.lookup(basis.codes[src] + weights[i] - weights[j])
                rows.append(dst.astype(itype))
                cols.append(src.astype(itype))
                vals.append(amp)
        if model.p_hop:
            # a pair from site j to an empty site i: -(P/2) * 2
            src = np.flatnonzero((ni == 0) & (nj == 2))
            if src.size:
                dst = basis.lookup(basis.codes[src] + 2 * (weights[i] - weights[j]))
                rows.append(dst.astype(itype))
                cols.append(src.astype(itype))
                vals.append(np.full(src.size, -model.p_hop))

    h = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    h.sum_duplicates()
    return h


def number_operator_diagonal(basis: SectorBasis) -> np.ndarray:
    return basis.occupations.sum(axis=1).astype(float)


def pair_number_diagonal(basis: SectorBasis) -> np.ndarray:
    return (basis.occupations == 2).sum(axis=1).astype(float)
