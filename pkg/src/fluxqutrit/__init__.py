"""Fluxonium qutrit arrays: single-atom spectra, effective lattice models and their many-body physics."""

from .effective import (
    CouplingSpec,
    DegeneracyWarning,
    EffectiveParams,
    LatticeModel,
    TwoQutritMatrix,
    build_lattice_model,
    build_two_qutrit_rwa,
    chain_model,
    extract_effective_params,
    full_two_atom_diagonalization,
    inverse_capacitance_row,
    schrieffer_wolff_correction,
)
from .errors import (
    ConvergenceError,
    FluxQutritError,
    NumericalError,
    PolicyError,
    PreconditionError,
    PropagationError,
    ResolutionError,
    TruncationError,
    ValidationError,
)
from .gutzwiller import GutzwillerSolution, analytic_boundary, minimize_bipartite, minimize_uniform, phase_diagram_scan
from .qutrit import (
    CoherenceParams,
    LevelPolicy,
    QutritDescriptor,
    extract_qutrit,
    find_resonant_flux,
    qutrit_coherence,
    sweep_parameters,
)
from .spectra import CircuitSpec, HHJJSpec, Spectrum, diagonalize_fluxonium, diagonalize_periodic

__version__ = "0.1.0"
