"""Qutrit level selection, effective constants and coherence estimates."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import constants
from scipy.optimize import brentq

from .errors import FluxQutritError, NumericalError, PolicyError, ValidationError
from .spectra import CircuitSpec, Spectrum, diagonalize_fluxonium, fluxonium_energies

log = logging.getLogger(__name__)

RESONANCE_TOL = 1e-6  # GHz
FLUXON_THRESHOLD = np.pi
SWEET_SPOT_SLOPE = 1e-4  # GHz per flux quantum
QUTRIT_PAIRS = ((0, 1), (1, 2), (0, 2))


class LevelPolicy(enum.Enum):
    """Which atom levels play the roles of qutrit states 0, 1, 2."""

    LOWEST_THREE = (0, 1, 2)
    SKIP_SECOND = (0, 1, 3)

    @property
    def levels(self) -> tuple[int, int, int]:
        return self.value

    @classmethod
    def parse(cls, name: "str | LevelPolicy") -> "LevelPolicy":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValidationError(f"unknown level policy {name!r}") from None


class _Everywhere:
    """Sentinel: the anharmonicity vanishes identically (harmonic atom)."""

    def __repr__(self):
        return "RESONANT_EVERYWHERE"

    def __reduce__(self):
        return "RESONANT_EVERYWHERE"


RESONANT_EVERYWHERE = _Everywhere()


@dataclass(frozen=True)
class CoherenceParams:
    """Noise model for dielectric loss and 1/f flux noise."""

    temperature: float = 0.020
    loss_tangent_amp: float = 2e-6
    loss_tangent_exp: float = 0.15
    loss_tangent_pivot: float = 6.0
    flux_noise_amp: float = 1e-6
    hbar: float = constants.hbar
    k_b: float = constants.k
    phi0: float = constants.h / (2 * constants.e)

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValidationError("temperature must be positive")
        if self.loss_tangent_amp < 0 or self.flux_noise_amp < 0:
            raise ValidationError("noise amplitudes must be non-negative")

    def loss_tangent(self, freq_ghz: float) -> float:
        return self.loss_tangent_amp * (abs(freq_ghz) / self.loss_tangent_pivot) ** self.loss_tangent_exp


@dataclass(frozen=True, eq=False)
class QutritDescriptor:
    """Three selected levels of one atom and the lattice constants they imply.

    ``n3`` and ``phi3`` are the 3x3 charge and phase matrices in the qutrit
    frame, rephased so that ``n3[1, 0]`` and ``n3[2, 1]`` are real positive.
    """

    levels: tuple[int, int, int]
    omega10: float
    omega21: float
    delta_hubbard: float
    delta_protect: float
    delta_protect_signed: float
    protect_pair: tuple[int, int]
    alpha: float
    p_over_j_cap: float
    p_over_j_ind: float
    w1: float
    w2: float
    regimes: tuple[str, str]
    n3: np.ndarray = field(repr=False)
    phi3: np.ndarray = field(repr=False)
    flux: float | None = None

    @property
    def omega20(self) -> float:
        return self.omega10 + self.omega21

    def summary(self) -> dict:
        """Scalar fields only (for CSV/JSON rows)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("n3", "phi3")}
        d["levels"] = "-".join(map(str, self.levels))
        d["protect_pair"] = "-".join(map(str, self.protect_pair))
        d["regimes"] = "-".join(self.regimes)
        return d


def qutrit_phases(spectrum: Spectrum, levels) -> np.ndarray:
    """Phase factors c_a (|a> -> c_a|a>) making n_10 and n_21 real positive."""
    n = spectrum.n_elems
    l0, l1, l2 = levels
    c = np.ones(3, dtype=complex)
    for k, (lo, hi) in enumerate(((l0, l1), (l1, l2)), start=1):
        elem = c[k - 1] * n[hi, lo]  # n'_hi,lo = conj(c_hi) c_lo n_hi,lo
        c[k] = elem / abs(elem) if abs(elem) > 0 else 1.0
    return c


def qutrit_frame(spectrum: Spectrum, levels):
    """Level permutation (qutrit levels first) and phases for the whole spectrum.

    Returns ``(order, phases)``; the rephased charge matrix is
    ``conj(phases)[:, None] * n[order][:, order] * phases[None, :]``.
    """
    order = list(levels) + [k for k in range(spectrum.n_levels) if k not in levels]
    phases = np.ones(len(order), dtype=complex)
    phases[:3] = qutrit_phases(spectrum, levels)
    return np.array(order), phases


def _rephase(mat, order, phases):
    m = np.asarray(mat)[np.ix_(order, order)]
    return phases.conj()[:, None] * m * phases[None, :]


def classify_transition(spectrum: Spectrum, a: int, b: int) -> str:
    """``"fluxon"`` if the mean phase moves by more than pi between the levels."""
    if a == b:
        raise ValidationError("transition needs two distinct levels")
    shift = np.real(spectrum.phi_elems[b, b] - spectrum.phi_elems[a, a])
    return "fluxon" if abs(shift) > FLUXON_THRESHOLD else "plasmon"


def extract_qutrit(
    spectrum: Spectrum,
    policy: LevelPolicy = LevelPolicy.LOWEST_THREE,
    scan_levels: int = 8,
    flux: float | None = None,
) -> QutritDescriptor:
    """Effective qutrit constants from one atom spectrum."""
    policy = LevelPolicy.parse(policy)
    levels = policy.levels
    if spectrum.n_levels < max(scan_levels, max(levels) + 1):
        raise ValidationError(f"spectrum has {spectrum.n_levels} levels; need {scan_levels}")
    e = spectrum.energies
    if min(e[levels[1]] - e[levels[0]], e[levels[2]] - e[levels[1]]) < 1e-9:
        raise PolicyError(f"qutrit levels {levels} are not distinct")

    omega10 = float(e[levels[1]] - e[levels[0]])
    omega21 = float(e[levels[2]] - e[levels[1]])

    best = (math.inf, 0.0, (0, 0))
    for other in range(scan_levels):
        if other in levels:
            continue
        for q in levels:
            signed = abs(e[other] - e[q]) - omega10
            if abs(signed) < best[0]:
                best = (abs(signed), signed, (other, q))

    order, phases = qutrit_frame(spectrum, levels)
    n3 = _rephase(spectrum.n_elems, order, phases)[:3, :3]
    phi3 = _rephase(spectrum.phi_elems, order, phases)[:3, :3]
    n10, n21, n20 = abs(n3[1, 0]), abs(n3[2, 1]), abs(n3[2, 0])
    p10, p20 = abs(phi3[1, 0]), abs(phi3[2, 0])
    if n10 == 0:
        raise PolicyError("vanishing 0-1 charge matrix element")

    # with inductive coupling g: J = -g |phi10|^2, P = -g |phi20|^2,
    # dW_r^2 = g (phi_rr - phi_00)^2, so w_r = (phi_rr - phi_00)^2 / (|phi10|^2 + |phi20|^2)
    norm = p10**2 + p20**2
    d1 = np.real(phi3[1, 1] - phi3[0, 0])
    d2 = np.real(phi3[2, 2] - phi3[0, 0])
    w1, w2 = (d1**2 / norm, d2**2 / norm) if norm > 0 else (0.0, 0.0)

    return QutritDescriptor(
        levels=levels,
        omega10=omega10,
        omega21=omega21,
        delta_hubbard=omega21 - omega10,
        delta_protect=float(best[0]),
        delta_protect_signed=float(best[1]),
        protect_pair=tuple(int(x) for x in best[2]),
        alpha=float(n21 / (np.sqrt(2.0) * n10)),
        p_over_j_cap=float(n20**2 / n10**2),
        p_over_j_ind=float(p20**2 / p10**2) if p10 > 0 else math.nan,
        w1=float(w1),
        w2=float(w2),
        regimes=(
            classify_transition(spectrum, levels[0], levels[1]),
            classify_transition(spectrum, levels[1], levels[2]),
        ),
        n3=n3,
        phi3=phi3,
        flux=flux,
    )


# --------------------------------------------------------------------------
# resonance search


def _anharmonicity(template: CircuitSpec, levels, n_levels, basis_size):
    def f(flux):
        e = fluxonium_energies(template.with_flux(flux), n_levels, basis_size)
        return (e[levels[2]] - e[levels[1]]) - (e[levels[1]] - e[levels[0]])

    return f


def find_resonant_flux(
    template: CircuitSpec,
    policy: LevelPolicy = LevelPolicy.LOWEST_THREE,
    flux_range: tuple[float, float] = (0.0, 0.5),
    grid: int = 64,
    basis_size: int = 150,
):
    """Flux values where the qutrit is harmonic (omega21 = omega10).

    Returns an ascending tuple of roots (possibly empty), or
    ``RESONANT_EVERYWHERE`` when ``e_j == 0``.
    """
    policy = LevelPolicy.parse(policy)
    if grid < 64:
        raise ValidationError("grid must have at least 64 points")
    lo, hi = flux_range
    if not lo < hi:
        raise ValidationError("empty flux range")
    if template.e_j == 0:
        return RESONANT_EVERYWHERE
    levels = policy.levels
    f = _anharmonicity(template, levels, max(levels) + 2, basis_size)
    xs = np.linspace(lo, hi, grid)
    ys = np.array([f(x) for x in xs])
    roots = []
    for i in range(grid - 1):
        if ys[i] == 0.0:
            roots.append(float(xs[i]))
            continue
        if np.sign(ys[i]) * np.sign(ys[i + 1]) < 0:
            root = brentq(f, xs[i], xs[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
            if abs(f(root)) >= RESONANCE_TOL:
                raise NumericalError(f"bisection near flux {root:.6f} left |Delta| = {abs(f(root)):.2e} GHz")
            roots.append(float(root))
    if ys[-1] == 0.0:
        roots.append(float(xs[-1]))
    return tuple(roots)


# --------------------------------------------------------------------------
# coherence


def dielectric_rate(spectrum: Spectrum, a: int, b: int, coh: CoherenceParams = CoherenceParams()):
    """Dielectric-loss rate (1/us) and lifetime (us) of the a<->b transition."""
    if not spectrum.e_c > 0:
        raise ValidationError("charging energy must be positive")
    freq = abs(spectrum.omega(a, b))
    if freq == 0:
        raise ValidationError("transition frequency is zero")
    phi = abs(spectrum.phi_elems[a, b])
    if phi == 0:
        return 0.0, math.inf
    w = 2 * np.pi * freq * 1e9
    e_c = constants.h * spectrum.e_c * 1e9
    x = coh.hbar * w / (2 * coh.k_b * coh.temperature)
    rate = coh.hbar * w**2 / (4 * e_c) * phi**2 * coh.loss_tangent(freq) / math.tanh(x)
    rate_us = float(rate) * 1e-6
    return rate_us, (1.0 / rate_us if rate_us > 0 else math.inf)


def flux_slopes(spec: CircuitSpec, pairs, step: float = 1e-5, n_levels: int | None = None, basis_size: int = 150):
    """d(omega_b - omega_a)/d(flux) in GHz per flux quantum, for each (a, b).

    Central differences at ``step`` and ``step/2`` combined by one Richardson
    step. Raises :class:`NumericalError` if the two estimates disagree by more
    than 1 % (away from sweet spots).
    """
    n_levels = n_levels or max(max(p) for p in pairs) + 2
    e = {s: fluxonium_energies(spec.with_flux(spec.flux + s), n_levels, basis_size)
         for s in (step, -step, step / 2, -step / 2)}
    out = []
    for a, b in pairs:
        def d(h):
            return ((e[h][b] - e[h][a]) - (e[-h][b] - e[-h][a])) / (2 * h)

        coarse, fine = d(step), d(step / 2)
        slope = (4 * fine - coarse) / 3
        if abs(slope) >= SWEET_SPOT_SLOPE and abs(coarse - fine) > 0.01 * abs(slope):
            raise NumericalError(
                f"flux derivative of {a}<->{b} not converged ({coarse:.6g} vs {fine:.6g})"
            )
        out.append(float(slope))
    return out


def _dephasing_from_slope(slope: float, coh: CoherenceParams) -> float:
    if abs(slope) < SWEET_SPOT_SLOPE:
        return math.inf  # sweet spot: first-order insensitive, higher-order limited
    return 1e6 / (coh.flux_noise_amp * 2 * np.pi * abs(slope) * 1e9)


def flux_dephasing_time(
    spec: CircuitSpec, a: int, b: int, coh: CoherenceParams = CoherenceParams(), basis_size: int = 150
) -> float:
    """Flux-noise dephasing time (us); ``inf`` at a sweet spot."""
    if a == b:
        raise ValidationError("transition needs two distinct levels")
    return _dephasing_from_slope(flux_slopes(spec, [(a, b)], basis_size=basis_size)[0], coh)


@dataclass(frozen=True)
class CoherenceSummary:
    """Lifetimes (us) of the three qutrit transitions, keyed by qutrit labels."""

    t_diel: dict
    t_phi: dict

    def worst_diel(self):
        pair = min(self.t_diel, key=self.t_diel.get)
        return self.t_diel[pair], pair

    def worst_phi(self):
        pair = min(self.t_phi, key=self.t_phi.get)
        return self.t_phi[pair], pair


def qutrit_coherence(
    spec: CircuitSpec,
    spectrum: Spectrum,
    levels,
    coh: CoherenceParams = CoherenceParams(),
    basis_size: int = 150,
) -> CoherenceSummary:
    atom_pairs = [(levels[a], levels[b]) for a, b in QUTRIT_PAIRS]
    t_diel = {p: dielectric_rate(spectrum, *ap, coh)[1] for p, ap in zip(QUTRIT_PAIRS, atom_pairs)}
    slopes = flux_slopes(spec, atom_pairs, basis_size=basis_size)
    t_phi = {p: _dephasing_from_slope(s, coh) for p, s in zip(QUTRIT_PAIRS, slopes)}
    return CoherenceSummary(t_diel=t_diel, t_phi=t_phi)


# --------------------------------------------------------------------------
# reference regimes and sweeps

# (E_J, level policy, nominal resonant flux) at E_C = 0.6 GHz, E_L = 1.5 GHz
REFERENCE_REGIMES = {
    "pp": (2.2, LevelPolicy.LOWEST_THREE, 0.413),
    "ff": (6.5, LevelPolicy.LOWEST_THREE, 0.446),
    "pf": (8.0, LevelPolicy.SKIP_SECOND, 0.243),
    "fp": (9.0, LevelPolicy.SKIP_SECOND, 0.393),
}
REFERENCE_E_C = 0.6
REFERENCE_E_L = 1.5


def resonant_spec(template: CircuitSpec, policy, nominal_flux: float | None = None, basis_size: int = 150):
    """Resonant CircuitSpec; among several roots the one closest to ``nominal_flux``."""
    roots = find_resonant_flux(template, policy, basis_size=basis_size)
    if roots is RESONANT_EVERYWHERE:
        return template
    if not roots:
        raise NumericalError("no resonant flux in [0, 0.5]")
    target = template.flux if nominal_flux is None else nominal_flux
    return template.with_flux(min(roots, key=lambda r: abs(r - target)))


def reference_regime_row(
    key: str,
    coh: CoherenceParams = CoherenceParams(),
    policy: LevelPolicy | None = None,
    basis_size: int = 150,
) -> dict:
    """Descriptor and coherence columns for one of the four reference regimes."""
    e_j, default_policy, nominal = REFERENCE_REGIMES[key]
    policy = LevelPolicy.parse(policy) if policy is not None else default_policy
    template = CircuitSpec(REFERENCE_E_C, e_j, REFERENCE_E_L, nominal)
    spec = resonant_spec(template, policy, nominal, basis_size)
    spectrum = diagonalize_fluxonium(spec, basis_size=basis_size)
    q = extract_qutrit(spectrum, policy, flux=spec.flux)
    cs = qutrit_coherence(spec, spectrum, q.levels, coh, basis_size)
    return _row(spec, q, cs) | {"regime": key}


def _row(spec: CircuitSpec, q: QutritDescriptor, cs: CoherenceSummary) -> dict:
    t_diel, p_diel = cs.worst_diel()
    t_phi, p_phi = cs.worst_phi()
    return {
        "e_c": spec.e_c,
        "e_j": spec.e_j,
        "e_l": spec.e_l,
        **q.summary(),
        "flux": spec.flux,
        "t_diel_us": t_diel,
        "t_diel_pair": "%d-%d" % p_diel,
        "t_phi_us": t_phi,
        "t_phi_pair": "%d-%d" % p_phi,
    }


SWEEP_AXES = ("e_j", "e_l", "flux")
SWEEP_COLUMNS = (
    "i", "j", "root", "status", "e_c", "e_j", "e_l", "flux", "levels", "omega10", "omega21",
    "delta_hubbard", "delta_protect", "delta_protect_signed", "protect_pair", "alpha",
    "p_over_j_cap", "p_over_j_ind", "w1", "w2", "regimes", "t_diel_us", "t_diel_pair",
    "t_phi_us", "t_phi_pair",
)


def _sweep_point(task):
    (i, j), values, fixed, policy, auto_resonance, coh, basis_size = task
    params = dict(fixed)
    params.update(values)
    base = {"i": i, "j": j, "root": 0, **params}
    try:
        template = CircuitSpec(**params)
        if auto_resonance:
            roots = find_resonant_flux(template, policy, basis_size=basis_size)
            if roots is RESONANT_EVERYWHERE:
                specs = [template]
            elif not roots:
                return [base | {"status": "miss"}]
            else:
                specs = [template.with_flux(r) for r in roots]
        else:
            specs = [template]
        rows = []
        for k, spec in enumerate(specs):
            spectrum = diagonalize_fluxonium(spec, basis_size=basis_size)
            q = extract_qutrit(spectrum, policy, flux=spec.flux)
            cs = qutrit_coherence(spec, spectrum, q.levels, coh, basis_size)
            rows.append(base | _row(spec, q, cs) | {"root": k, "status": "ok"})
        return rows
    except FluxQutritError as exc:
        return [base | {"status": f"error: {type(exc).__name__}: {exc}"}]


def sweep_parameters(
    axes: dict,
    fixed: dict,
    policy: LevelPolicy = LevelPolicy.LOWEST_THREE,
    auto_resonance: bool = True,
    coh: CoherenceParams = CoherenceParams(),
    basis_size: int = 150,
    workers: int | None = None,
) -> list[dict]:
    """Qutrit descriptors on a 2-D grid over two of (e_j, e_l, flux).

    Rows are ordered by grid index; with ``auto_resonance`` each resonant
    flux root gives its own row, and points without a root carry
    ``status == "miss"``. Per-point failures are recorded, never raised.
    """
    from .parallel import ordered_map

    policy = LevelPolicy.parse(policy)
    names = list(axes)
    if len(names) != 2 or not set(names) <= set(SWEEP_AXES) or names[0] == names[1]:
        raise ValidationError(f"need two distinct axes from {SWEEP_AXES}")
    if auto_resonance and "flux" in names:
        raise ValidationError("flux cannot be swept when auto_resonance is on")
    grids = [np.asarray(axes[k], dtype=float) for k in names]
    if min(len(g) for g in grids) < 2:
        raise ValidationError("each grid needs at least 2 points")
    fixed = {k: v for k, v in fixed.items() if k not in names}
    if auto_resonance:
        fixed.setdefault("flux", 0.0)
    missing = {"e_c", "e_j", "e_l", "flux"} - set(fixed) - set(names)
    if missing:
        raise ValidationError(f"missing fixed parameters: {sorted(missing)}")
    tasks = [
        ((i, j), {names[0]: float(x), names[1]: float(y)}, fixed, policy, auto_resonance, coh, basis_size)
        for i, x in enumerate(grids[0])
        for j, y in enumerate(grids[1])
    ]
    rows = []
    for chunk in ordered_map(_sweep_point, tasks, workers):
        rows.extend(chunk)
    return rows
