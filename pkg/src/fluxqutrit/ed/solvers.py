"""Ground states and real-time propagation in one particle-number sector."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from ..errors import ConvergenceError, PropagationError, ValidationError
from .basis import SectorBasis, SectorState

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000
DEGENERACY_TOL = 1e-8


def matrix_scale(h) -> float:
    """Infinity norm of H (an upper bound on its spectral radius)."""
    if sparse.issparse(h):
        return float(abs(h).sum(axis=1).max()) if h.nnz else 0.0
    return float(np.abs(h).sum(axis=1).max())


@dataclass(frozen=True)
class GroundState:
    energy: float
    state: SectorState
    residual: float
    degeneracy: int
    low_energies: np.ndarray


def ground_state(
    h,
    basis: SectorBasis,
    tol: float | None = None,
    seed: int = 0,
    n_eigs: int = 4,
    max_restarts: int = 3,
    method: str = "auto",
) -> GroundState:
    """Lowest eigenpair; dense below 2000 states, restarted Lanczos (ARPACK) above.

    ``method`` ("auto", "dense", "lanczos") overrides the size rule.

    ``tol`` bounds the residual ||Hv - Ev|| (default 1e-9 times the matrix
    scale). ``degeneracy`` counts the computed eigenvalues within 1e-8 of the
    lowest one.
    """
    dim = h.shape[0]
    if dim < 1:
        raise ValidationError("empty Hilbert space")
    if method not in ("auto", "dense", "lanczos"):
        raise ValidationError(f"unknown method {method!r}")
    dense_path = dim < DENSE_LIMIT if method == "auto" else method == "dense"
    if not dense_path and dim < 3:
        dense_path = True  # ARPACK needs k < dim - 1
    raw_scale = matrix_scale(h)
    if raw_scale == 0.0:
        dense_path = True  # ARPACK cannot start from a null Krylov space
    scale = max(raw_scale, 1.0)
    tol = 1e-9 * scale if tol is None else tol

    if dense_path:
        dense = h.toarray() if sparse.issparse(h) else np.asarray(h)
        vals, vecs = eigh(dense)
        energies, v = vals, vecs[:, 0]
    else:
        rng = np.random.default_rng(seed)
        h = sparse.csr_matrix(h)
        k = min(n_eigs, dim - 2)
        best = None
        for attempt in range(max_restarts):
            v0 = rng.standard_normal(dim)
            try:
                vals, vecs = eigsh(h, k=k, which="SA", v0=v0, tol=1e-13, maxiter=dim * 10)
            except ArpackNoConvergence as exc:
                if len(exc.eigenvalues):
                    vals, vecs = exc.eigenvalues, exc.eigenvectors
                else:
                    continue
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            res = float(np.linalg.norm(h @ vecs[:, 0] - vals[0] * vecs[:, 0]))
            if best is None or res < best[2]:
                best = (vals, vecs[:, 0], res)
            if res <= tol:
                break
        if best is None:
            raise ConvergenceError("Lanczos produced no eigenpair", best_residual=None)
        energies, v, _ = best

    v = v / np.linalg.norm(v)
    # deterministic global sign: largest component positive
    k_max = int(np.argmax(np.abs(v)))
    if v[k_max] < 0:
        v = -v
    e0 = float(energies[0])
    residual = float(np.linalg.norm(h @ v - e0 * v))
    if residual > tol:
        raise ConvergenceError(f"ground-state residual {residual:.2e} above {tol:.2e}", best_residual=residual)
    degeneracy = int(np.sum(np.abs(np.asarray(energies) - e0) < DEGENERACY_TOL))
    low = np.asarray(energies)[: max(n_eigs, 1)]
    return GroundState(e0, SectorState(basis, v), residual, degeneracy, low)


# --------------------------------------------------------------------------
# time evolution


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    density: np.ndarray  # (T, L): <n_j>
    pair_density: np.ndarray  # (T, L): <n_j (n_j - 1)>
    norm: np.ndarray
    number: np.ndarray
    final_state: SectorState

    def rows(self):
        """(t, site, n, n_pair) records in time-major order."""
        for k, t in enumerate(self.times):
            for j in range(self.density.shape[1]):
                yield float(t), j, float(self.density[k, j]), float(self.pair_density[k, j])


def _lanczos_step(h, psi, dt, tol, max_dim):
    """exp(-i H dt) psi by an adaptively grown Krylov space.

    Returns (new_state, error_estimate). The error estimate is the standard
    a-posteriori bound beta_m |e_m^T exp(-i T_m dt) e_1| ||psi||.
    """
    beta0 = np.linalg.norm(psi)
    if beta0 == 0:
        return psi.copy(), 0.0
    basis = [psi / beta0]
    alphas, betas = [], []
    w = h @ basis[0]
    for m in range(1, max_dim + 1):
        a = np.vdot(basis[-1], w).real
        alphas.append(a)
        w = w - a * basis[-1]
        if m > 1:
            w = w - betas[-1] * basis[-2]
        # full reorthogonalisation keeps the small basis accurate
        for q in basis:
            w = w - np.vdot(q, w) * q
        beta = np.linalg.norm(w)
        evals, evecs = eigh_tridiagonal(np.array(alphas), np.array(betas)) if m > 1 else (
            np.array(alphas), np.ones((1, 1)))
        coeff = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        err = beta * abs(coeff[-1]) * beta0
        if beta < 1e-14 * beta0 or err < tol or m == max_dim:
            out = beta0 * sum(c * q for c, q in zip(coeff, basis))
            return out, (0.0 if beta < 1e-14 * beta0 else err)
        betas.append(beta)
        basis.append(w / beta)
        w = h @ basis[-1]
    raise AssertionError("unreachable")


def time_evolve(
    state0: SectorState,
    h,
    times,
    dt: float | None = None,
    step_tol: float = 1e-9,
    max_krylov: int = 40,
    max_halvings: int = 12,
    method: str = "auto",
) -> Trajectory:
    """Propagate ``state0`` under H and record densities at ``times``.

    Below 2000 states the propagator is applied exactly through a dense
    eigendecomposition; otherwise Krylov steps of at most ``dt`` are taken,
    halving the step whenever the error estimate exceeds ``step_tol``.
    ``method`` ("auto", "dense", "krylov") overrides the size rule.
    """
    if method not in ("auto", "dense", "krylov"):
        raise ValidationError(f"unknown method {method!r}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) < 0):
        raise ValidationError("times must be a non-empty ascending sequence")
    basis = state0.basis
    occ = basis.occupations.astype(float)
    pair = (basis.occupations == 2).astype(float) * 2.0
    n_tot = occ.sum(axis=1)
    dim = basis.dimension

    dens, pairs, norms, numbers = [], [], [], []

    def record(psi):
        prob = np.abs(psi) ** 2
        dens.append(prob @ occ)
        pairs.append(prob @ pair)
        norms.append(np.sqrt(prob.sum()))
        numbers.append(prob @ n_tot)

    psi = state0.amplitudes.astype(complex)
    if (dim < DENSE_LIMIT if method == "auto" else method == "dense"):
        dense = h.toarray() if sparse.issparse(h) else np.asarray(h)
        vals, vecs = eigh(dense)
        c0 = vecs.conj().T @ psi
        for t in times:
            psi = vecs @ (np.exp(-1j * vals * (t - times[0])) * c0)
            record(psi)
    else:
        h = sparse.csr_matrix(h)
        if dt is None:
            offdiag = h - sparse.diags(h.diagonal())
            dt = 0.05 / max(1.0, float(abs(offdiag).max()))
        t_now = times[0]
        for t in times:
            while t - t_now > 1e-14:
                step = min(dt, t - t_now)
                for _ in range(max_halvings + 1):
                    new, err = _lanczos_step(h, psi, step, step_tol, max_krylov)
                    if err <= step_tol:
                        break
                    step /= 2
                else:
                    raise PropagationError(f"Krylov step error {err:.2e} above {step_tol:.1e} at t={t_now:.4f}")
                psi, t_now = new, t_now + step
            record(psi)

    return Trajectory(
        times=times,
        density=np.array(dens),
        pair_density=np.array(pairs),
        norm=np.array(norms),
        number=np.array(numbers),
        final_state=SectorState(basis, psi),
    )
