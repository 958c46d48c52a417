"""Single-atom circuit spectra.

Energies are linear frequencies in GHz throughout. The fluxonium solver works
in the eigenbasis of the harmonic part ``4 E_C n^2 + (E_L/2) phi^2``; the
periodic (higher-harmonic junction) solver works in the charge basis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import ResolutionError, TruncationError, ValidationError

DEGENERACY_TOL = 1e-9
CONVERGENCE_RTOL = 1e-7


@dataclass(frozen=True)
class CircuitSpec:
    """Fluxonium circuit parameters (GHz) and flux bias in units of the flux quantum."""

    e_c: float
    e_j: float
    e_l: float
    flux: float = 0.0

    def __post_init__(self):
        for name in ("e_c", "e_j", "e_l", "flux"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.e_c <= 0:
            raise ValidationError("e_c must be positive")
        if self.e_j < 0:
            raise ValidationError("e_j must be non-negative")
        if self.e_l < 0:
            raise ValidationError("e_l must be non-negative")

    def with_flux(self, flux: float) -> "CircuitSpec":
        return replace(self, flux=float(flux))


@dataclass(frozen=True)
class HHJJSpec:
    """Two higher-harmonic junctions in a loop (no superinductor)."""

    gap: float
    transmissions_a: tuple[float, ...]
    transmissions_b: tuple[float, ...]
    flux: float = 0.0
    charge_bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "transmissions_a", tuple(float(t) for t in self.transmissions_a))
        object.__setattr__(self, "transmissions_b", tuple(float(t) for t in self.transmissions_b))
        if not self.gap > 0:
            raise ValidationError("gap must be positive")
        for t in self.transmissions_a + self.transmissions_b:
            if not 0.0 <= t <= 1.0:
                raise ValidationError(f"transmission {t} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenenergies and matrix elements of one atom in a fixed gauge.

    ``phi_elems[a, b] = <a|phi|b>`` and ``n_elems[a, b] = <a|n|b>``. For the
    fluxonium the wavefunctions are real, so ``phi_elems`` is real symmetric and
    ``n_elems`` is purely imaginary Hermitian.
    """

    energies: np.ndarray
    phi_elems: np.ndarray
    n_elems: np.ndarray
    basis_size: int
    converged: bool
    e_c: float
    phi_cell_restricted: bool = False
    phi_sq: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("energies", "phi_elems", "n_elems", "phi_sq"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def omega(self, a: int, b: int) -> float:
        """Transition frequency ``omega_a - omega_b``."""
        return float(self.energies[a] - self.energies[b])

    def to_dict(self) -> dict:
        return {
            "energies": self.energies.tolist(),
            "phi_real": np.real(self.phi_elems).tolist(),
            "phi_imag": np.imag(self.phi_elems).tolist(),
            "n_real": np.real(self.n_elems).tolist(),
            "n_imag": np.imag(self.n_elems).tolist(),
            "basis_size": self.basis_size,
            "converged": self.converged,
            "e_c": self.e_c,
            "phi_cell_restricted": self.phi_cell_restricted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Spectrum":
        return cls(
            energies=np.asarray(d["energies"], dtype=float),
            phi_elems=np.asarray(d["phi_real"]) + 1j * np.asarray(d["phi_imag"]),
            n_elems=np.asarray(d["n_real"]) + 1j * np.asarray(d["n_imag"]),
            basis_size=int(d["basis_size"]),
            converged=bool(d["converged"]),
            e_c=float(d["e_c"]),
            phi_cell_restricted=bool(d.get("phi_cell_restricted", False)),
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# --------------------------------------------------------------------------
# fluxonium


@lru_cache(maxsize=32)
def _oscillator_operators(e_c: float, e_l: float, size: int):
    """Phase, charge, cos(phi) and sin(phi) in the first ``size`` oscillator states.

    The trigonometric operators come from the spectral decomposition of phi in a
    basis twice as large, so the kept block is free of truncation-edge artifacts.
    """
    phi_zpf = (8.0 * e_c / e_l) ** 0.25
    big = 2 * size
    off = np.sqrt(np.arange(1, big)) * phi_zpf / np.sqrt(2.0)
    nodes, vecs = eigh_tridiagonal(np.zeros(big), off)
    cos_phi = ((vecs * np.cos(nodes)) @ vecs.T)[:size, :size]
    sin_phi = ((vecs * np.sin(nodes)) @ vecs.T)[:size, :size]

    phi = np.diag(off[: size - 1], 1)
    phi = phi + phi.T
    lower = np.diag(np.sqrt(np.arange(1, size)), 1)  # annihilation operator
    # n = i (a^dag - a) / (sqrt(2) phi_zpf) = i * n_im
    n_im = (lower.T - lower) / (np.sqrt(2.0) * phi_zpf)
    for arr in (phi, n_im, cos_phi, sin_phi):
        arr.setflags(write=False)
    return phi, n_im, cos_phi, sin_phi


def _order_levels(energies, phi_sq):
    """Ascending energy order; near-degenerate runs ordered by <phi^2>."""
    order = list(np.argsort(energies, kind="stable"))
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and energies[order[j]] - energies[order[j - 1]] < DEGENERACY_TOL:
            j += 1
        if j - i > 1:
            order[i:j] = sorted(order[i:j], key=lambda k: phi_sq[k])
        i = j
    return np.array(order)


def _fix_real_gauge(vecs):
    """Flip signs so the first non-negligible coefficient of each column is positive."""
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-6 * np.abs(col).max())[0]
        if col[idx] < 0:
            vecs[:, k] = -col
    return vecs


def _solve_fluxonium(spec: CircuitSpec, n_levels: int, basis_size: int):
    phi, n_im, cos_phi, sin_phi = _oscillator_operators(spec.e_c, spec.e_l, basis_size)
    omega_p = np.sqrt(8.0 * spec.e_c * spec.e_l)
    theta = 2.0 * np.pi * spec.flux
    h = np.diag(omega_p * (np.arange(basis_size) + 0.5))
    if spec.e_j:
        # cos(phi + theta) = cos(theta) cos(phi) - sin(theta) sin(phi)
        h = h - spec.e_j * (np.cos(theta) * cos_phi - np.sin(theta) * sin_phi)
    extra = min(n_levels + 4, basis_size) - 1
    energies, vecs = eigh(h, subset_by_index=[0, extra])
    phi_sq = np.einsum("ik,ij,jk->k", vecs, phi @ phi, vecs)
    order = _order_levels(energies, phi_sq)[:n_levels]
    energies, vecs, phi_sq = energies[order], vecs[:, order], phi_sq[order]
    vecs = _fix_real_gauge(vecs)
    phi_elems = vecs.T @ phi @ vecs
    n_elems = 1j * (vecs.T @ n_im @ vecs)
    return energies, phi_elems, n_elems, phi_sq


def fluxonium_energies(spec: CircuitSpec, n_levels: int = 10, basis_size: int = 150) -> np.ndarray:
    """Lowest energies only, without the convergence check (used inside sweeps)."""
    if spec.e_l <= 0:
        raise ValidationError("fluxonium requires e_l > 0")
    return _solve_fluxonium(spec, n_levels, basis_size)[0]


def diagonalize_fluxonium(
    spec: CircuitSpec,
    n_levels: int = 10,
    basis_size: int = 150,
    check: bool = True,
) -> Spectrum:
    """Diagonalize ``4E_C n^2 - E_J cos(phi + 2 pi flux) + (E_L/2) phi^2``.

    With ``check`` the problem is re-solved in a basis of twice the size and a
    :class:`TruncationError` is raised if any kept energy moves by more than
    1e-7 (relative).
    """
    if spec.e_l <= 0:
        raise ValidationError("fluxonium requires e_l > 0")
    if n_levels < 1 or 3 * n_levels > basis_size:
        raise ValidationError("need 1 <= n_levels <= basis_size / 3")

    energies, phi_elems, n_elems, phi_sq = _solve_fluxonium(spec, n_levels, basis_size)
    converged = False
    if check:
        ref = _solve_fluxonium(spec, n_levels, 2 * basis_size)[0]
        scale = np.maximum(np.abs(ref), np.sqrt(8.0 * spec.e_c * spec.e_l))
        shift = np.max(np.abs(energies - ref) / scale)
        if shift >= CONVERGENCE_RTOL:
            raise TruncationError(
                f"energies shift by {shift:.2e} (relative) when the basis is doubled "
                f"from {basis_size}; increase basis_size"
            )
        converged = True
    return Spectrum(
        energies=energies,
        phi_elems=phi_elems,
        n_elems=n_elems,
        basis_size=basis_size,
        converged=converged,
        e_c=spec.e_c,
        phi_sq=phi_sq,
    )


def gauge_identity_residual(spectrum: Spectrum) -> np.ndarray:
    """Relative residual of ``omega_ab phi_ab = -8i E_C n_ab`` for every kept pair."""
    w = spectrum.energies[:, None] - spectrum.energies[None, :]
    lhs = w * spectrum.phi_elems
    rhs = -8j * spectrum.e_c * spectrum.n_elems
    scale = np.maximum(np.abs(rhs), 1e-12)
    return np.abs(lhs - rhs) / scale


# --------------------------------------------------------------------------
# higher-harmonic junctions


def junction_potential(gap: float, transmissions: Sequence[float], phi) -> np.ndarray:
    """``-gap * sum_j sqrt(1 - T_j sin^2(phi/2))``."""
    s2 = np.sin(np.asarray(phi, dtype=float) / 2.0) ** 2
    out = np.zeros_like(s2)
    for t in transmissions:
        out -= gap * np.sqrt(1.0 - t * s2)
    return out


def hhjj_potential(spec: HHJJSpec, phi):
    """Loop potential ``V_A(phi) + V_B(phi + 2 pi flux)`` in GHz."""
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValidationError("phi must be finite")
    v = junction_potential(spec.gap, spec.transmissions_a, phi)
    v = v + junction_potential(spec.gap, spec.transmissions_b, phi + 2.0 * np.pi * spec.flux)
    return v if v.ndim else float(v)


def fourier_coefficients(potential: Callable, grid: int = 4096) -> np.ndarray:
    """Coefficients ``c_k`` of ``V(phi) = sum_k c_k exp(i k phi)`` (FFT ordering)."""
    phi = 2.0 * np.pi * np.arange(grid) / grid
    coeffs = np.fft.fft(potential(phi)) / grid
    mags = np.abs(coeffs)
    k = np.abs(np.fft.fftfreq(grid, 1.0 / grid))
    tail = mags[k >= grid // 2 - grid // 8].max()
    if tail > 1e-10 * mags.max():
        raise ResolutionError(
            f"Fourier tail {tail:.2e} exceeds 1e-10 of the largest coefficient; refine the grid"
        )
    return coeffs


def diagonalize_periodic_potential(
    potential: Callable,
    e_c: float,
    charge_bias: float = 0.0,
    n_levels: int = 10,
    charge_cutoff: int = 40,
    grid: int = 4096,
) -> Spectrum:
    """Diagonalize ``4E_C (n - n_g)^2 + V(phi)`` for a 2 pi-periodic ``V``.

    Phase matrix elements are those of the sawtooth phase on [-pi, pi); the
    returned spectrum is flagged ``phi_cell_restricted``.
    """
    if e_c <= 0:
        raise ValidationError("e_c must be positive")
    if charge_cutoff < 20:
        raise ValidationError("charge_cutoff must be >= 20")
    if grid < 4096:
        raise ValidationError("grid must have at least 4096 points")
    if 4 * charge_cutoff >= grid:
        raise ValidationError("grid too small for the charge cutoff")
    coeffs = fourier_coefficients(potential, grid)
    charges = np.arange(-charge_cutoff, charge_cutoff + 1)
    diff = charges[:, None] - charges[None, :]
    h = coeffs[diff % grid] + np.diag(4.0 * e_c * (charges - charge_bias) ** 2)
    h = 0.5 * (h + h.conj().T)
    n_levels = min(n_levels, len(charges))
    energies, vecs = eigh(h, subset_by_index=[0, n_levels - 1])

    # largest component of each eigenvector real and positive
    idx = np.argmax(np.abs(vecs), axis=0)
    phases = vecs[idx, np.arange(vecs.shape[1])]
    vecs = vecs * (np.abs(phases) / phases)

    with np.errstate(divide="ignore", invalid="ignore"):
        saw = np.where(diff != 0, 1j * (-1.0) ** diff / np.where(diff == 0, 1, diff), 0.0)
    n_elems = vecs.conj().T @ (charges[:, None] * vecs)
    phi_elems = vecs.conj().T @ saw @ vecs
    return Spectrum(
        energies=energies,
        phi_elems=phi_elems,
        n_elems=n_elems,
        basis_size=len(charges),
        converged=True,
        e_c=e_c,
        phi_cell_restricted=True,
        phi_sq=np.real(np.einsum("ik,ij,jk->k", vecs.conj(), saw @ saw, vecs)),
    )


def diagonalize_periodic(
    spec: HHJJSpec,
    e_c: float,
    n_levels: int = 10,
    charge_cutoff: int = 40,
    grid: int = 4096,
) -> Spectrum:
    """Charge-basis spectrum of the higher-harmonic junction loop."""
    return diagonalize_periodic_potential(
        lambda phi: hhjj_potential(spec, phi),
        e_c,
        charge_bias=spec.charge_bias,
        n_levels=n_levels,
        charge_cutoff=charge_cutoff,
        grid=grid,
    )


def charge_dispersion(
    spec: HHJJSpec,
    e_c: float,
    transition: tuple[int, int] = (0, 1),
    n_g_grid: int = 21,
    potential: Callable | None = None,
    **kwargs,
) -> float:
    """Peak-to-peak variation (GHz) of a transition frequency over n_g in [0, 1/2].

    ``potential`` overrides the junction potential of ``spec`` (the offset
    charge is still taken from the scan).
    """
    if n_g_grid < 11:
        raise ValidationError("n_g_grid must be >= 11")
    a, b = transition
    pot = potential if potential is not None else (lambda phi: hhjj_potential(spec, phi))
    n_levels = max(a, b) + 1
    freqs = []
    for ng in np.linspace(0.0, 0.5, n_g_grid):
        sp = diagonalize_periodic_potential(pot, e_c, charge_bias=ng, n_levels=n_levels, **kwargs)
        freqs.append(sp.energies[b] - sp.energies[a])
    return float(np.max(freqs) - np.min(freqs))
