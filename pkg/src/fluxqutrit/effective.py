"""Two-qutrit effective Hamiltonians and lattice-model assembly.

Two-qutrit states |a, c> are indexed ``3 a + c``. Matrices live in the frame
rotating at the qutrit frequency omega10, where level 2 carries the on-site
energy Delta = omega21 - omega10.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh

from .errors import NumericalError, PreconditionError, ValidationError
from .qutrit import LevelPolicy, QutritDescriptor, _rephase, qutrit_frame
from .spectra import Spectrum

log = logging.getLogger(__name__)

PAIR_INDEX = {(a, c): 3 * a + c for a in range(3) for c in range(3)}
PHOTONS = np.array([a + c for a in range(3) for c in range(3)])


class DegeneracyWarning(UserWarning):
    """A large share of second-order weight sits on near-resonant intermediate states."""


@dataclass(frozen=True)
class CouplingSpec:
    """Capacitive (charge-charge) and inductive (phase-phase) coupling strengths in GHz."""

    g_c: float = 0.0
    g_l: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.g_c) and np.isfinite(self.g_l)):
            raise ValidationError("couplings must be finite")

    @property
    def single_channel(self) -> bool:
        return (self.g_c == 0) != (self.g_l == 0)

    def scaled(self, factor: float) -> "CouplingSpec":
        return CouplingSpec(self.g_c * factor, self.g_l * factor)


@dataclass(frozen=True, eq=False)
class TwoQutritMatrix:
    """9x9 two-qutrit Hamiltonian in the rotating frame.

    ``offset`` is the lab-frame energy of |0,0> without coupling; lab-frame
    eigenvalues of the photon-number-N block are ``eig + offset + N omega10``.
    """

    entries: np.ndarray
    rwa_only: bool = True
    omega10: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.shape != (9, 9):
            raise ValidationError("two-qutrit matrix must be 9x9")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def __getitem__(self, key):
        """``h[(a, c), (b, d)]`` gives H_{ac,bd}."""
        left, right = key
        return self.entries[PAIR_INDEX[tuple(left)], PAIR_INDEX[tuple(right)]]

    def __add__(self, other: np.ndarray) -> "TwoQutritMatrix":
        return replace(self, entries=self.entries + np.asarray(other), rwa_only=False)

    def number_commutator_norm(self) -> float:
        n = np.diag(PHOTONS.astype(float))
        return float(np.abs(self.entries @ n - n @ self.entries).max())

    def block_eigenvalues(self, lab_frame: bool = False) -> dict[int, np.ndarray]:
        """Eigenvalues of each photon-number block N = 0..4."""
        out = {}
        for n in range(5):
            idx = np.flatnonzero(PHOTONS == n)
            vals = np.linalg.eigvalsh(self.entries[np.ix_(idx, idx)])
            out[n] = vals + (self.offset + n * self.omega10 if lab_frame else 0.0)
        return out


def build_two_qutrit_rwa(q: QutritDescriptor, c: CouplingSpec, q_b: QutritDescriptor | None = None) -> TwoQutritMatrix:
    """Number-conserving part of the coupled two-qutrit Hamiltonian."""
    q_b = q_b or q
    h = np.zeros((9, 9), dtype=complex)
    for (a, cc), i in PAIR_INDEX.items():
        for (b, d), j in PAIR_INDEX.items():
            if a + cc != b + d:
                continue
            h[i, j] = c.g_c * q.n3[a, b] * q_b.n3[cc, d] + c.g_l * q.phi3[a, b] * q_b.phi3[cc, d]
        h[i, i] += q.delta_hubbard * (a == 2) + q_b.delta_hubbard * (cc == 2)
    return TwoQutritMatrix(0.5 * (h + h.conj().T), rwa_only=True, omega10=q.omega10)


def _frame_matrices(spectrum: Spectrum, policy: LevelPolicy, n_levels: int):
    levels = LevelPolicy.parse(policy).levels
    order, phases = qutrit_frame(spectrum, levels)
    order, phases = order[:n_levels], phases[:n_levels]
    n = _rephase(spectrum.n_elems, order, phases)
    phi = _rephase(spectrum.phi_elems, order, phases)
    return spectrum.energies[order], n, phi


def _coupling_rows(n_a, phi_a, n_b, phi_b, c: CouplingSpec):
    """<a c|V|r s> for qutrit states (rows) and all product states (columns)."""
    v = c.g_c * np.einsum("ar,cs->acrs", n_a[:3], n_b[:3])
    v = v + c.g_l * np.einsum("ar,cs->acrs", phi_a[:3], phi_b[:3])
    return v.reshape(9, -1)


def schrieffer_wolff_correction(
    spec_a: Spectrum,
    spec_b: Spectrum,
    c: CouplingSpec,
    level_cutoff: int = 12,
    resonance_tol: float = 1e-3,
    policy: LevelPolicy = LevelPolicy.LOWEST_THREE,
    warn_fraction: float = 0.1,
) -> np.ndarray:
    """Second-order correction from virtual transitions out of each photon-number block.

    Intermediate product states are all pairs below ``level_cutoff`` except
    the qutrit states of the same photon number (the resonant model space)
    and pairs within ``resonance_tol`` of the initial energy, which are
    logged and skipped. The result is block diagonal and Hermitian.
    """
    if level_cutoff < 8:
        raise ValidationError("level_cutoff must be >= 8")
    if min(spec_a.n_levels, spec_b.n_levels) < level_cutoff:
        raise ValidationError("spectra have fewer levels than level_cutoff")
    e_a, n_a, phi_a = _frame_matrices(spec_a, policy, level_cutoff)
    e_b, n_b, phi_b = _frame_matrices(spec_b, policy, level_cutoff)
    v = _coupling_rows(n_a, phi_a, n_b, phi_b, c)

    e_inter = (e_a[:, None] + e_b[None, :]).ravel()
    r, s = np.divmod(np.arange(level_cutoff**2), level_cutoff)
    inter_photons = np.where((r < 3) & (s < 3), r + s, -1)

    dh = np.zeros((9, 9), dtype=complex)
    total = excluded = 0.0
    for i, (a, cc) in enumerate(PAIR_INDEX):
        den = e_a[a] + e_b[cc] - e_inter
        model = inter_photons == a + cc
        near = (np.abs(den) <= resonance_tol) & ~model
        weight = np.abs(v[i]) ** 2
        total += weight[~model].sum()
        if near.any():
            excluded += weight[near].sum()
            for k in np.flatnonzero(near & (weight > 0)):
                log.info("excluded intermediate (%d,%d) for |%d,%d>: denominator %.3e GHz",
                         r[k], s[k], a, cc, den[k])
        keep = ~(model | near)
        inv = np.zeros_like(den)
        inv[keep] = 1.0 / den[keep]
        same_block = np.flatnonzero(PHOTONS == a + cc)
        dh[i, same_block] = (v[i] * inv) @ v[same_block].conj().T
    if total > 0 and excluded > warn_fraction * total:
        warnings.warn(f"{excluded / total:.1%} of second-order weight excluded as near-resonant",
                      DegeneracyWarning, stacklevel=2)
    return 0.5 * (dh + dh.conj().T)


@dataclass(frozen=True)
class EffectiveParams:
    j_hop: float
    alpha: float
    alpha_prime: float
    p_hop: float
    dw1_sq: float
    dw2_sq: float
    w1: float
    w2: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def extract_effective_params(h: TwoQutritMatrix | np.ndarray) -> EffectiveParams:
    """Lattice constants read off a two-qutrit matrix.

    J = -H_{01,10}, P = -H_{02,20}, alpha = H_{11,20} / (sqrt(2) H_{01,10}),
    alpha' = sqrt(H_{21,12} / (2 H_{01,10})). alpha and alpha' are NaN when
    |J| < 1e-12.
    """
    m = h.entries if isinstance(h, TwoQutritMatrix) else np.asarray(h)
    if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
        raise ValidationError("matrix is not Hermitian")

    def el(left, right):
        return float(np.real(m[PAIR_INDEX[left], PAIR_INDEX[right]]))

    hop = el((0, 1), (1, 0))
    j_hop = -hop
    p_hop = -el((0, 2), (2, 0))
    if abs(hop) < 1e-12:
        alpha = alpha_prime = math.nan
    else:
        alpha = el((1, 1), (2, 0)) / (np.sqrt(2.0) * hop)
        ratio = el((2, 1), (1, 2)) / (2.0 * hop)
        alpha_prime = math.sqrt(ratio) if ratio >= 0 else math.nan
    dw_sq = [el((r, r), (r, r)) - 2 * el((0, r), (0, r)) + el((0, 0), (0, 0)) for r in (1, 2)]
    denom = j_hop + p_hop
    w = [-x / denom if denom != 0 else math.nan for x in dw_sq]
    return EffectiveParams(j_hop, alpha, alpha_prime, p_hop, dw_sq[0], dw_sq[1], w[0], w[1])


# --------------------------------------------------------------------------
# full two-atom reference


def _product_hamiltonian(spec_a: Spectrum, spec_b: Spectrum, c: CouplingSpec, n_levels: int):
    la, lb = spec_a.energies[:n_levels], spec_b.energies[:n_levels]
    eye = np.eye(n_levels)
    h = np.kron(np.diag(la), eye) + np.kron(eye, np.diag(lb))
    sl = slice(0, n_levels)
    h = h + c.g_c * np.kron(spec_a.n_elems[sl, sl], spec_b.n_elems[sl, sl])
    h = h + c.g_l * np.kron(spec_a.phi_elems[sl, sl], spec_b.phi_elems[sl, sl])
    return 0.5 * (h + h.conj().T)


def full_two_atom_diagonalization(
    spec_a: Spectrum,
    spec_b: Spectrum,
    c: CouplingSpec,
    keep: int = 20,
    n_levels: int = 12,
    check_levels: int = 16,
    tol: float = 1e-6,
) -> np.ndarray:
    """Lowest ``keep`` eigenvalues (GHz, lab frame) of the coupled atom pair.

    Raises :class:`NumericalError` if raising the per-atom truncation to
    ``check_levels`` moves any kept eigenvalue by more than ``tol``.
    """
    if keep > n_levels**2:
        raise ValidationError("keep exceeds the product-basis size")
    if min(spec_a.n_levels, spec_b.n_levels) < check_levels:
        raise ValidationError(f"spectra need {check_levels} levels for the truncation check")
    vals = eigh(_product_hamiltonian(spec_a, spec_b, c, n_levels), eigvals_only=True)[:keep]
    ref = eigh(_product_hamiltonian(spec_a, spec_b, c, check_levels), eigvals_only=True)[:keep]
    shift = np.abs(vals - ref).max()
    if shift > tol:
        raise NumericalError(f"two-atom eigenvalues move by {shift:.2e} GHz on raising the truncation")
    return vals


def qutrit_block_levels(
    spec_a: Spectrum,
    spec_b: Spectrum,
    c: CouplingSpec,
    policy: LevelPolicy = LevelPolicy.LOWEST_THREE,
    n_levels: int = 12,
) -> dict[int, np.ndarray]:
    """Lab-frame eigenvalues of the full pair that continue the qutrit product states.

    For each photon-number block the eigenstates with the largest weight on
    that block's qutrit product states are selected.
    """
    levels = LevelPolicy.parse(policy).levels
    vals, vecs = eigh(_product_hamiltonian(spec_a, spec_b, c, n_levels))
    out = {}
    for n in range(5):
        idx = [levels[a] * n_levels + levels[cc] for (a, cc), k in PAIR_INDEX.items() if a + cc == n]
        weight = (np.abs(vecs[idx]) ** 2).sum(axis=0)
        pick = np.sort(np.argsort(weight)[::-1][: len(idx)])
        out[n] = np.sort(vals[pick])
    return out


def two_qutrit_lab_offset(q: QutritDescriptor, spec_a: Spectrum, spec_b: Spectrum | None = None) -> float:
    spec_b = spec_b or spec_a
    return float(spec_a.energies[q.levels[0]] + spec_b.energies[q.levels[0]])


def coupling_curves(
    spectrum: Spectrum,
    q: QutritDescriptor,
    couplings,
    policy: LevelPolicy = LevelPolicy.LOWEST_THREE,
    level_cutoff: int = 12,
):
    """Two identical atoms at each coupling in ``couplings``.

    Returns ``(levels, params)``: lab-frame block eigenvalues of the RWA,
    corrected and full two-atom problems, and the effective constants read
    off the RWA and corrected matrices.
    """
    offset = two_qutrit_lab_offset(q, spectrum)
    levels, params = [], []
    for c in couplings:
        g = c.g_c or c.g_l
        rwa = replace(build_two_qutrit_rwa(q, c), offset=offset)
        corrected = rwa + schrieffer_wolff_correction(spectrum, spectrum, c, level_cutoff, policy=policy)
        full = qutrit_block_levels(spectrum, spectrum, c, policy, n_levels=level_cutoff)
        e_rwa = rwa.block_eigenvalues(lab_frame=True)
        e_sw = corrected.block_eigenvalues(lab_frame=True)
        for n in range(5):
            for k in range(len(full[n])):
                levels.append({"g": g, "block": n, "k": k, "e_rwa": float(e_rwa[n][k]),
                               "e_corrected": float(e_sw[n][k]), "e_full": float(full[n][k])})
        for label, m in (("rwa", rwa), ("corrected", corrected)):
            params.append({"g": g, "matrix": label, **extract_effective_params(m).as_dict()})
    return levels, params


# --------------------------------------------------------------------------
# capacitance network


def inverse_capacitance_row(c_q: float, c_c: float, r: int, m_max: int = 200) -> float:
    """Element (j, j+r) of the inverse capacitance matrix of an infinite chain.

    Qubit capacitance ``c_q`` to ground and ``c_c`` between neighbours, summed
    as a walk expansion of ``1 / (c_q + 2 c_c - c_c T)``.
    """
    if c_q <= 0 or c_c < 0:
        raise ValidationError("need c_q > 0 and c_c >= 0")
    if c_c / c_q >= 0.5:
        raise ValidationError("c_c / c_q must be below 1/2")
    if m_max < 20:
        raise ValidationError("m_max must be >= 20")
    r = abs(int(r))
    diag = c_q + 2 * c_c
    x = c_c / diag
    if x == 0:
        return 1.0 / diag if r == 0 else 0.0
    term = x**r  # binom(r, 0) x^r
    total = term
    for m in range(m_max):
        term *= (r + 2 * m + 2) * (r + 2 * m + 1) / ((m + 1) * (r + m + 1)) * x * x
        total += term
    if term >= 1e-14 * total:
        raise ValidationError(f"series not converged after {m_max} terms")
    return total / diag


# --------------------------------------------------------------------------
# lattice model


@dataclass(frozen=True)
class LatticeModel:
    """Bose-Hubbard parameters with at most two bosons per site.

    Bond terms are ``-J alpha^(n_i + n_j - 1) (b_i^+ b_j + h.c.)``,
    ``-(P/2)((b_i^+)^2 b_j^2 + h.c.)`` and ``w_sign W(n_i) W(n_j)`` with
    ``W(n) = w0 + dw1 [n = 1] + dw2 [n = 2]``; on-site ``(delta/2) n (n - 1)``.
    """

    n_sites: int = 1
    bonds: tuple = ()
    boundary: str = "open"
    j_hop: float = 1.0
    alpha: float = 1.0
    p_hop: float = 0.0
    delta: float = 0.0
    dw1: float = 0.0
    dw2: float = 0.0
    w0: float = 0.0
    w_sign: int = 1

    def __post_init__(self):
        bonds = tuple(tuple(int(x) for x in b) for b in self.bonds)
        object.__setattr__(self, "bonds", bonds)
        if self.n_sites < 1:
            raise ValidationError("n_sites must be >= 1")
        for i, j in bonds:
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites) or i == j:
                raise ValidationError(f"invalid bond ({i}, {j})")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError("boundary must be 'open' or 'periodic'")
        if self.w_sign not in (1, -1):
            raise ValidationError("w_sign must be +1 or -1")
        for name in ("j_hop", "alpha", "p_hop", "delta", "dw1", "dw2", "w0"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    def with_params(self, **kwargs) -> "LatticeModel":
        return replace(self, **kwargs)

    @property
    def coordination(self) -> float:
        return 2.0 * len(self.bonds) / self.n_sites

    def sublattice_coloring(self):
        """0/1 label per site if the bond graph is bipartite, else None."""
        adj = [[] for _ in range(self.n_sites)]
        for i, j in self.bonds:
            adj[i].append(j)
            adj[j].append(i)
        color = [-1] * self.n_sites
        for start in range(self.n_sites):
            if color[start] >= 0:
                continue
            color[start] = 0
            stack = [start]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if color[v] < 0:
                        color[v] = 1 - color[u]
                        stack.append(v)
                    elif color[v] == color[u]:
                        return None
        return color

    @property
    def bipartite(self) -> bool:
        return self.sublattice_coloring() is not None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["bonds"] = [list(b) for b in self.bonds]
        return d


def chain_bonds(n_sites: int, periodic: bool = False) -> tuple:
    bonds = [(i, i + 1) for i in range(n_sites - 1)]
    if periodic and n_sites > 2:
        bonds.append((n_sites - 1, 0))
    return tuple(bonds)


def square_bonds(lx: int, ly: int, periodic: bool = False) -> tuple:
    bonds = []
    for x in range(lx):
        for y in range(ly):
            i = x * ly + y
            if x + 1 < lx or (periodic and lx > 2):
                bonds.append((i, ((x + 1) % lx) * ly + y))
            if y + 1 < ly or (periodic and ly > 2):
                bonds.append((i, x * ly + (y + 1) % ly))
    return tuple(bonds)


def chain_model(n_sites: int, periodic: bool = False, **params) -> LatticeModel:
    return LatticeModel(
        n_sites=n_sites,
        bonds=chain_bonds(n_sites, periodic),
        boundary="periodic" if periodic else "open",
        **params,
    )


def build_lattice_model(
    q: QutritDescriptor,
    c: CouplingSpec,
    n_sites: int,
    bonds,
    boundary: str = "open",
) -> LatticeModel:
    """Lattice constants of identical qutrits coupled by a single channel.

    Inductive W amplitudes are stored as ``sqrt(|g_L|) phi_rr`` with the sign
    of ``g_L`` moved into ``w_sign``, so that W products keep the sign of g_L.
    """
    if not c.single_channel:
        raise PreconditionError("exactly one of g_c, g_l must be nonzero")
    if c.g_c:
        g, m = c.g_c, q.n3
        w0 = dw1 = dw2 = 0.0
        sign = 1
    else:
        g, m = c.g_l, q.phi3
        root = math.sqrt(abs(g))
        diag = np.real(np.diag(q.phi3))
        w0 = root * diag[0]
        dw1 = root * (diag[1] - diag[0])
        dw2 = root * (diag[2] - diag[0])
        sign = 1 if g > 0 else -1
    return LatticeModel(
        n_sites=n_sites,
        bonds=bonds,
        boundary=boundary,
        j_hop=float(-g * abs(m[1, 0]) ** 2),
        alpha=float(abs(m[2, 1]) / (math.sqrt(2.0) * abs(m[1, 0]))),
        p_hop=float(-g * abs(m[2, 0]) ** 2),
        delta=q.delta_hubbard,
        dw1=float(dw1),
        dw2=float(dw2),
        w0=float(w0),
        w_sign=sign,
    )
