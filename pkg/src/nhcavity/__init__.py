"""Two dissipative two-level atoms in a two-mode cavity with modulated coupling.

Block-wise analytic evolution (closed-form quartic eigenvalues and a Newton
divided-difference exponential), a Runge-Kutta reference integrator, and the
concurrence and Pancharatnam-phase observables built on top.
"""

from .errors import (
    ConfigError,
    NHCavityError,
    RegimeWarning,
    SolverError,
)
from .model import (
    BlockAmplitudes,
    BlockCoefficients,
    SystemConfig,
    block_coefficients,
    build_generator,
    validate_config,
)
from .observables import (
    ObservableRecord,
    PhaseJump,
    concurrence,
    dem_sum,
    pancharatnam,
    phase_jump_scan,
    phi_sweep,
    time_series,
)
from .presets import PRESETS, get_preset
from .propagator import divided_differences, evolve_block, expm_newton, reference_integrate
from .quartic import char_coeffs, companion_roots, solve_quartic
from .state import (
    DenseState,
    ReducedDensity,
    assemble_dense,
    coherent_coefficients,
    initial_block_amplitudes,
    overlap,
    partial_trace_atoms,
)

__all__ = [
    "BlockAmplitudes", "BlockCoefficients", "ConfigError", "DenseState", "NHCavityError",
    "ObservableRecord", "PRESETS", "PhaseJump", "ReducedDensity", "RegimeWarning",
    "SolverError", "SystemConfig", "assemble_dense", "block_coefficients", "build_generator",
    "char_coeffs", "coherent_coefficients", "companion_roots", "concurrence", "dem_sum",
    "divided_differences", "evolve_block", "expm_newton", "get_preset",
    "initial_block_amplitudes", "overlap", "pancharatnam", "partial_trace_atoms",
    "phase_jump_scan", "phi_sweep", "reference_integrate", "solve_quartic", "time_series",
    "validate_config",
]
