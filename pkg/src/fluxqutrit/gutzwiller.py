"""Gutzwiller mean field for the two-boson-per-site lattice model.

Local states are real amplitudes (psi0, psi1, psi2) fixed by normalisation and
density, leaving psi2 as the single uniform variational parameter. The
bipartite ansatz uses amplitudes c (sublattice C, density n + m) and d
(sublattice D, density n - m).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .effective import LatticeModel
from .errors import ValidationError

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
COHERENCE_THRESHOLD = 1e-6
IMBALANCE_THRESHOLD = 0.5
STABILITY_STEP = 1e-3
# rounding in the second difference is ~1e-16 |e| / h^2; curvature above -tol counts as flat
STABILITY_TOL = 1e-6


@dataclass(frozen=True)
class GutzwillerSolution:
    psi: tuple
    energy_per_site: float
    g1: float
    g1_pair: float
    imbalance: float = 0.0
    stability: float | None = None
    ansatz: str = "uniform"

    @property
    def label(self) -> str:
        return phase_label(self.g1, self.g1_pair, self.imbalance)


def phase_label(g1: float, g1_pair: float, imbalance: float = 0.0) -> str:
    """SF when single-particle coherence survives, PSF when only pair coherence does."""
    if g1 >= COHERENCE_THRESHOLD:
        return "SF"
    if g1_pair >= COHERENCE_THRESHOLD:
        return "PSF"
    return "PCB" if abs(imbalance) > IMBALANCE_THRESHOLD else "MI"


# --------------------------------------------------------------------------
# local amplitudes


def _psi2_bounds(n):
    return math.sqrt(max(0.0, n - 1.0)), math.sqrt(n / 2.0)


def _amplitudes(psi2, n):
    psi2 = np.asarray(psi2, dtype=float)
    p0 = np.sqrt(np.clip(1.0 - n + psi2**2, 0.0, None))
    p1 = np.sqrt(np.clip(n - 2.0 * psi2**2, 0.0, None))
    return p0, p1, psi2


def _hop_mean(p0, p1, p2, alpha):
    """<B> with <0|B|1> = 1 and <1|B|2> = sqrt(2) alpha."""
    return p0 * p1 + SQRT2 * alpha * p1 * p2


def _w_mean(p0, p1, p2, model):
    w0 = model.w0
    return w0 * p0**2 + (w0 + model.dw1) * p1**2 + (w0 + model.dw2) * p2**2


def _check_density(n):
    if not 0.0 < n < 2.0:
        raise ValidationError("density must lie in (0, 2)")


def uniform_energy(psi2, n: float, z: float, model: LatticeModel):
    """Mean-field energy per site of the translation-invariant product state."""
    _check_density(n)
    lo, hi = _psi2_bounds(n)
    arr = np.asarray(psi2, dtype=float)
    if np.any(arr < lo - 1e-12) or np.any(arr > hi + 1e-12):
        raise ValidationError(f"psi2 outside [{lo}, {hi}]")
    e = _uniform_energy(np.clip(arr, lo, hi), n, z, model)
    return e if e.ndim else float(e)


def _uniform_energy(psi2, n, z, model):
    p0, p1, p2 = _amplitudes(psi2, n)
    hop = _hop_mean(p0, p1, p2, model.alpha)
    w = _w_mean(p0, p1, p2, model)
    return (
        -z * model.j_hop * hop**2
        - z * model.p_hop * (p0 * p2) ** 2
        + model.delta * p2**2
        + 0.5 * z * model.w_sign * w**2
    )


def _golden_section(f, a, b, tol=1e-10):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _uniform_minimum(n, z, model, grid=256, tol=1e-10):
    lo, hi = _psi2_bounds(n)
    if hi - lo < tol:
        return lo, float(_uniform_energy(lo, n, z, model))
    xs = np.linspace(lo, hi, grid)
    es = _uniform_energy(xs, n, z, model)
    # local minima of the sampled curve, endpoints included
    left = np.r_[np.inf, es[:-1]]
    right = np.r_[es[1:], np.inf]
    cand = np.flatnonzero((es <= left) & (es <= right))
    cand = cand[np.argsort(es[cand])][:3]
    f = lambda x: float(_uniform_energy(x, n, z, model))
    best_x, best_e = xs[cand[0]], float(es[cand[0]])
    for i in cand:
        a, b = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
        x = _golden_section(f, a, b, tol)
        for trial in (x, a, b):
            e = f(trial)
            if e < best_e:
                best_x, best_e = trial, e
    return float(best_x), best_e


def _second_difference(energy_at, n, h=STABILITY_STEP):
    if n - h <= 0.0:
        return (energy_at(n) - 2 * energy_at(n + h) + energy_at(n + 2 * h)) / h**2
    if n + h >= 2.0:
        return (energy_at(n) - 2 * energy_at(n - h) + energy_at(n - 2 * h)) / h**2
    return (energy_at(n + h) - 2 * energy_at(n) + energy_at(n - h)) / h**2


def minimize_uniform(n: float, z: float, model: LatticeModel, stability: bool = True) -> GutzwillerSolution:
    """Global minimum over psi2 (256-point scan plus golden-section refinement)."""
    _check_density(n)
    psi2, e = _uniform_minimum(n, z, model)
    p0, p1, p2 = (float(v) for v in _amplitudes(psi2, n))
    stab = None
    if stability:
        stab = float(_second_difference(lambda x: _uniform_minimum(x, z, model)[1], n))
    return GutzwillerSolution(
        psi=(p0, p1, p2),
        energy_per_site=e,
        g1=float((p0 * p1 + SQRT2 * p1 * p2) ** 2),
        g1_pair=float(2.0 * (p0 * p2) ** 2),
        imbalance=0.0,
        stability=stab,
        ansatz="uniform",
    )


# --------------------------------------------------------------------------
# bipartite ansatz


def _imbalance_bound(n):
    return min(n, 2.0 - n)


def _bipartite_energy(c2, d2, m, n, z, model):
    c0, c1, c2 = _amplitudes(c2, n + m)
    d0, d1, d2 = _amplitudes(d2, n - m)
    hop = _hop_mean(c0, c1, c2, model.alpha) * _hop_mean(d0, d1, d2, model.alpha)
    w = _w_mean(c0, c1, c2, model) * _w_mean(d0, d1, d2, model)
    return (
        -z * model.j_hop * hop
        - z * model.p_hop * c0 * c2 * d0 * d2
        + 0.5 * model.delta * (c2**2 + d2**2)
        + 0.5 * z * model.w_sign * w
    )


def bipartite_energy(c2, d2, m, n: float, z: float, model: LatticeModel) -> float:
    """Mean-field energy per site with different product states on the two sublattices."""
    _check_density(n)
    if abs(m) > _imbalance_bound(n) + 1e-12:
        raise ValidationError("imbalance out of range")
    for amp, dens in ((c2, n + m), (d2, n - m)):
        lo, hi = _psi2_bounds(dens) if dens > 0 else (0.0, 0.0)
        if not lo - 1e-12 <= amp <= hi + 1e-12:
            raise ValidationError(f"amplitude {amp} outside [{lo}, {hi}]")
    return float(_bipartite_energy(c2, d2, m, n, z, model))


def _cube_to_params(u, n):
    """Unit cube (u_c, u_d, u_m) -> (c2, d2, m)."""
    u = np.clip(u, 0.0, 1.0)
    mmax = _imbalance_bound(n)
    m = mmax * (2.0 * u[..., 2] - 1.0)
    lo_c = np.sqrt(np.clip(n + m - 1.0, 0.0, None))
    hi_c = np.sqrt(np.clip((n + m) / 2.0, 0.0, None))
    lo_d = np.sqrt(np.clip(n - m - 1.0, 0.0, None))
    hi_d = np.sqrt(np.clip((n - m) / 2.0, 0.0, None))
    c2 = lo_c + u[..., 0] * (hi_c - lo_c)
    d2 = lo_d + u[..., 1] * (hi_d - lo_d)
    return c2, d2, m


def _bipartite_solution(c2, d2, m, n, z, model, stab=None):
    c = tuple(float(v) for v in _amplitudes(c2, n + m))
    d = tuple(float(v) for v in _amplitudes(d2, n - m))
    e = float(_bipartite_energy(c2, d2, m, n, z, model))
    g1 = (c[0] * c[1] + SQRT2 * c[1] * c[2]) * (d[0] * d[1] + SQRT2 * d[1] * d[2])
    g1_pair = 2.0 * c[0] * c[2] * d[0] * d[2]
    return GutzwillerSolution(
        psi=c + d + (float(m),),
        energy_per_site=e,
        g1=float(max(g1, 0.0)),
        g1_pair=float(max(g1_pair, 0.0)),
        imbalance=float(m),
        stability=stab,
        ansatz="bipartite",
    )


def _scalar_bipartite(n, z, model):
    """Plain-float energy on the unit cube (the simplex calls it thousands of times)."""
    mmax = _imbalance_bound(n)
    j, a, p, delta = model.j_hop, model.alpha, model.p_hop, model.delta
    w0, w1, w2 = model.w0, model.w0 + model.dw1, model.w0 + model.dw2
    ws = 0.5 * z * model.w_sign
    sq = math.sqrt

    def local(u, dens):
        lo = sq(max(dens - 1.0, 0.0))
        hi = sq(max(dens / 2.0, 0.0))
        x2 = lo + u * (hi - lo)
        x0 = sq(max(1.0 - dens + x2 * x2, 0.0))
        x1 = sq(max(dens - 2.0 * x2 * x2, 0.0))
        return x0, x1, x2

    def f(u):
        uc = min(max(u[0], 0.0), 1.0)
        ud = min(max(u[1], 0.0), 1.0)
        um = min(max(u[2], 0.0), 1.0)
        m = mmax * (2.0 * um - 1.0)
        c0, c1, c2 = local(uc, n + m)
        d0, d1, d2 = local(ud, n - m)
        hop = (c0 * c1 + SQRT2 * a * c1 * c2) * (d0 * d1 + SQRT2 * a * d1 * d2)
        wc = w0 * c0 * c0 + w1 * c1 * c1 + w2 * c2 * c2
        wd = w0 * d0 * d0 + w1 * d1 * d1 + w2 * d2 * d2
        return (-z * j * hop - z * p * c0 * c2 * d0 * d2
                + 0.5 * delta * (c2 * c2 + d2 * d2) + ws * wc * wd)

    return f


def _bipartite_minimum(n, z, model, grid=32, restarts=8, tol=1e-10):
    f = _scalar_bipartite(n, z, model)
    axis = np.linspace(0.0, 1.0, grid)
    cube = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    es = _bipartite_energy(*_cube_to_params(cube, n), n, z, model)

    psi2, e_uni = _uniform_minimum(n, z, model)
    lo, hi = _psi2_bounds(n)
    u_uni = (psi2 - lo) / (hi - lo) if hi > lo else 0.0
    on_axis = np.abs(cube[:, 2] - 0.5) < 1e-12
    starts = [
        np.array([u_uni, u_uni, 0.5]),
        cube[np.argmin(np.where(on_axis, es, np.inf))] if on_axis.any() else cube[0],
        np.array([0.5, 0.5, 0.0]),
        np.array([0.5, 0.5, 1.0]),
    ]
    for idx in np.argsort(es)[: restarts * 8]:
        if len(starts) >= max(restarts, 4):
            break
        if all(np.abs(cube[idx] - s).max() > 1.5 / (grid - 1) for s in starts):
            starts.append(cube[idx])

    def simplex(x0, xatol, fatol=1e-15):
        res = minimize(f, x0, method="Nelder-Mead", bounds=[(0, 1)] * 3,
                       options={"xatol": xatol, "fatol": fatol, "maxiter": 3000})
        return float(res.fun), np.clip(res.x, 0.0, 1.0)

    # loose restarts locate the basins; only the lowest ones are polished
    rough = sorted((simplex(s, 1e-4, 1e-9) for s in starts), key=lambda c: c[0])
    candidates = [(e_uni, np.array([u_uni, u_uni, 0.5]))]
    for e_r, u_r in rough:
        if e_r <= rough[0][0] + 1e-6:
            candidates.append(simplex(u_r, 1e-8, 1e-14))
        candidates.append((e_r, u_r))
    e_best = min(c[0] for c in candidates)
    near = [c for c in candidates if c[0] <= e_best + 1e-12]
    off = sum(c[0] > e_best + 1e-8 for c in candidates)
    if off:
        log.debug("%d of %d bipartite restarts end above the best energy", off, len(candidates))
    e_sel, u_sel = min(near, key=lambda c: abs(_cube_to_params(c[1], n)[2]))
    c2, d2, m = (float(v) for v in _cube_to_params(u_sel, n))
    if m < 0:  # sublattice relabelling
        c2, d2, m = d2, c2, -m
    return c2, d2, m, e_sel


def minimize_bipartite(
    n: float, z: float, model: LatticeModel, stability: bool = False, grid: int = 32, restarts: int = 8
) -> GutzwillerSolution:
    """Best two-sublattice product state from a grid scan and simplex restarts."""
    _check_density(n)
    c2, d2, m, _ = _bipartite_minimum(n, z, model, grid, restarts)
    stab = None
    if stability:
        stab = float(_second_difference(lambda x: _bipartite_minimum(x, z, model, grid, restarts)[3], n))
    return _bipartite_solution(c2, d2, m, n, z, model, stab)


# --------------------------------------------------------------------------
# closed-form phase boundaries


class Boundary(enum.Enum):
    PSF_ONSET_DELTA = "psf_onset_delta"
    MOTT_DELTA = "mott_delta"
    SF_PSF_PCRIT = "sf_psf_pcrit"
    MOTT_RECT_ALPHA = "mott_rect_alpha"
    MOTT_RECT_P = "mott_rect_p"
    PCB_MI_DELTA = "pcb_mi_delta"
    PSF_PCB_P = "psf_pcb_p"
    PSF_MI_J0 = "psf_mi_j0"


def analytic_boundary(kind, n: float = 1.0, z: float = 2.0, model: LatticeModel = LatticeModel()) -> float:
    """Closed-form transition value for the translation-invariant or J = 0 phases.

    Products of W amplitudes carry ``model.w_sign``, so ``dw1_sq`` below means
    ``w_sign * dw1**2``.
    """
    kind = Boundary(kind) if not isinstance(kind, Boundary) else kind
    j, a, p, delta = model.j_hop, model.alpha, model.p_hop, model.delta
    dw1_sq = model.w_sign * model.dw1**2
    dw2_sq = model.w_sign * model.dw2**2
    if kind in (Boundary.PSF_ONSET_DELTA, Boundary.SF_PSF_PCRIT):
        _check_density(n)
        kin = (math.sqrt(n - n * n / 2.0) + n * a) ** 2
        if kind is Boundary.PSF_ONSET_DELTA:
            return -2.0 * z * j / n * kin
        return 2.0 * j / n * kin + delta / z
    if kind is Boundary.MOTT_DELTA:
        return z * j * (1.0 + SQRT2 * a) ** 2
    if kind is Boundary.MOTT_RECT_ALPHA:
        if j <= 0 or delta < 0:
            raise ValidationError("Mott rectangle needs J > 0 and Delta >= 0")
        return math.sqrt(delta / (2.0 * z * j)) - 1.0 / SQRT2
    if kind is Boundary.MOTT_RECT_P:
        return 2.0 * delta / z
    if kind is Boundary.PCB_MI_DELTA:
        return z * dw1_sq
    if kind is Boundary.PSF_PCB_P:
        return dw2_sq / 2.0
    if kind is Boundary.PSF_MI_J0:
        # equal energies of the Mott state (z/2) dW1^2 and the pair superfluid
        # -zP/4 + Delta/2 + (z/8) dW2^2 at unit filling
        return z * dw1_sq + 0.5 * z * p - 0.25 * z * dw2_sq
    raise ValidationError(f"unknown boundary {kind}")


# --------------------------------------------------------------------------
# scans


def _set_axis(model: LatticeModel, name: str, value: float, z: float) -> LatticeModel:
    if name in ("alpha", "delta", "p_hop", "j_hop", "dw1", "dw2", "w0"):
        return model.with_params(**{name: float(value)})
    if name == "p_over_j":
        return model.with_params(p_hop=value * model.j_hop)
    if name == "delta_over_zj":
        return model.with_params(delta=value * z * model.j_hop)
    if name == "dw2sq_over_p":
        return model.with_params(dw2=math.sqrt(abs(value * model.p_hop)), w_sign=-1 if value < 0 else 1)
    if name == "delta_w_over_zp":
        return model.with_params(delta=value * z * model.p_hop + z * model.w_sign * model.dw1**2)
    raise ValidationError(f"unknown scan axis {name!r}")


SCAN_AXES = ("alpha", "delta", "p_hop", "j_hop", "dw1", "dw2", "w0",
             "p_over_j", "delta_over_zj", "dw2sq_over_p", "delta_w_over_zp")
# axes whose setters read other parameters are applied last
_AXIS_PRIORITY = {"p_over_j": 1, "delta_over_zj": 1, "dw2sq_over_p": 1, "delta_w_over_zp": 2}


def scan_point_model(template: LatticeModel, values: dict, z: float) -> LatticeModel:
    model = template
    for name in sorted(values, key=lambda k: _AXIS_PRIORITY.get(k, 0)):
        model = _set_axis(model, name, values[name], z)
    return model


@dataclass
class PhaseDiagram:
    axis_names: tuple
    axis_values: tuple
    energy: np.ndarray
    g1: np.ndarray
    g1_pair: np.ndarray
    imbalance: np.ndarray
    stability: np.ndarray
    labels: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def coherence_difference(self) -> np.ndarray:
        return self.g1 - self.g1_pair

    @property
    def unstable(self) -> np.ndarray:
        return np.nan_to_num(self.stability, nan=0.0) < -STABILITY_TOL

    def rows(self):
        """(axis1, axis2, e, g1, g1_pair, m, stability, label) in grid order."""
        xs, ys = self.axis_values
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                yield (float(x), float(y), float(self.energy[i, j]), float(self.g1[i, j]),
                       float(self.g1_pair[i, j]), float(self.imbalance[i, j]),
                       float(self.stability[i, j]), str(self.labels[i, j]))


def _scan_task(args):
    values, n, z, template, ansatz, stability = args
    try:
        model = scan_point_model(template, values, z)
        if ansatz == "uniform":
            sol = minimize_uniform(n, z, model, stability=stability)
        else:
            sol = minimize_bipartite(n, z, model, stability=False)
            if stability:
                # the uniform curvature flags phase separation of the homogeneous phases
                uni = minimize_uniform(n, z, model, stability=True)
                sol = GutzwillerSolution(sol.psi, sol.energy_per_site, sol.g1, sol.g1_pair,
                                         sol.imbalance, uni.stability, sol.ansatz)
        return sol, None
    except Exception as exc:  # recorded per point, the scan continues
        return None, f"{type(exc).__name__}: {exc}"


def phase_diagram_scan(
    axes: dict,
    n: float,
    z: float,
    template: LatticeModel,
    ansatz: str = "uniform",
    stability: bool = True,
    workers: int | None = None,
) -> PhaseDiagram:
    """Minimise the mean-field energy on a 2-D parameter grid and label phases."""
    from .parallel import ordered_map

    names = tuple(axes)
    if len(names) != 2:
        raise ValidationError("need exactly two scan axes")
    for name in names:
        if name not in SCAN_AXES:
            raise ValidationError(f"unknown scan axis {name!r}")
    if ansatz not in ("uniform", "bipartite"):
        raise ValidationError("ansatz must be 'uniform' or 'bipartite'")
    grids = tuple(np.asarray(axes[k], dtype=float) for k in names)
    if min(len(g) for g in grids) < 16:
        raise ValidationError("each axis needs at least 16 points")
    tasks = [({names[0]: x, names[1]: y}, n, z, template, ansatz, stability)
             for x in grids[0] for y in grids[1]]
    results = ordered_map(_scan_task, tasks, workers)

    shape = (len(grids[0]), len(grids[1]))
    out = {k: np.full(shape, np.nan) for k in ("energy", "g1", "g1_pair", "imbalance", "stability")}
    labels = np.full(shape, "ERR", dtype=object)
    errors = {}
    for k, (sol, err) in enumerate(results):
        idx = np.unravel_index(k, shape)
        if sol is None:
            errors[idx] = err
            continue
        out["energy"][idx] = sol.energy_per_site
        out["g1"][idx] = sol.g1
        out["g1_pair"][idx] = sol.g1_pair
        out["imbalance"][idx] = sol.imbalance
        if sol.stability is not None:
            out["stability"][idx] = sol.stability
        labels[idx] = sol.label
    return PhaseDiagram(names, grids, labels=labels, errors=errors, **out)


def boundary_mismatches(numeric: np.ndarray, reference: np.ndarray) -> list:
    """Grid points whose numeric label change is not within one cell of a reference change.

    A numeric label change between 8-neighbours is accepted when the reference
    labels in the 3x3 neighbourhood of either endpoint are not all equal.
    """
    nx, ny = numeric.shape

    def ref_changes_near(i, j):
        block = reference[max(i - 1, 0): i + 2, max(j - 1, 0): j + 2]
        return np.any(block != block.flat[0])

    bad = []
    for i in range(nx):
        for j in range(ny):
            for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
                k, l = i + di, j + dj
                if not (0 <= k < nx and 0 <= l < ny):
                    continue
                if numeric[i, j] != numeric[k, l] and not (ref_changes_near(i, j) or ref_changes_near(k, l)):
                    bad.append(((i, j), (k, l)))
    return bad
