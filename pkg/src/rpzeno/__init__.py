"""Anisotropic recombination yields of spin-selective radical pairs.

The package builds radical-pair spin Hamiltonians (Zeeman, hyperfine,
electron-electron dipolar), propagates them under asymmetric recombination
with an optional random-field relaxation superoperator, supports chirality-
induced initial states and recombination operators, and sweeps the
resulting yield anisotropy over rate constants and chirality angle.
"""

from .constants import (DEFAULT_FIELD_MT, DIPOLAR_1NM_RAD_PER_US, GAMMA_E,
                        MT_TO_RAD_PER_US, dipolar_coupling)
from .errors import (CheckpointMismatchError, ConfigError, DegenerateDecompositionError,
                     DimensionCapError, DivergentYieldError, QuadratureError,
                     RpzenoError, SensitivityUndefinedError)
from .spincore import (DipolarSpec, NucleusSpec, Orientation, SpinSystem,
                       build_eed, build_hyperfine, build_zeeman, embed,
                       field_vector, singlet_projector, spin_operators,
                       triplet_projector)
from .ciss import (CissConfig, CissModel, DensityOperator, Precursor,
                   channel_state, cisc_projector, cisp_projector, initial_state,
                   recombination_projector)
from .dynamics import (DEFAULT_DIM_CAP, EffectiveHamiltonian, EigenSystem,
                       RelaxationSpec, build_liouvillian, coherent_yield,
                       commutation_superoperator, effective_hamiltonian,
                       eigendecompose, escape_yield, nz_relaxation,
                       relaxed_yield, robust_eigendecompose, spectral_density,
                       trajectory, unvec, vec, yield_closed_form,
                       yield_liouville)
from .observables import (OrientationSet, anisotropy, coherence_statistics,
                          partial_trace_nuclei, relative_entropy_coherence,
                          sample_orientations, time_integrated_coherence)
from .sweep import (AxisSpec, FailedCell, OrientationSpec, SweepGrid, SweepResult,
                    factorized_kf_sweep, hyperfine_series, run_sweep)
from .config import (RunConfig, apply_grid_override, load_config, parse_config,
                     parse_grid_override)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DEFAULT_FIELD_MT", "DIPOLAR_1NM_RAD_PER_US", "GAMMA_E", "MT_TO_RAD_PER_US",
    "dipolar_coupling",
    "RpzenoError", "ConfigError", "DegenerateDecompositionError",
    "DivergentYieldError", "DimensionCapError", "SensitivityUndefinedError",
    "CheckpointMismatchError", "QuadratureError",
    "NucleusSpec", "DipolarSpec", "Orientation", "SpinSystem", "spin_operators",
    "embed", "field_vector", "build_zeeman", "build_hyperfine", "build_eed",
    "singlet_projector", "triplet_projector",
    "CissModel", "Precursor", "CissConfig", "DensityOperator", "cisp_projector",
    "cisc_projector", "channel_state", "initial_state", "recombination_projector",
    "DEFAULT_DIM_CAP", "EffectiveHamiltonian", "EigenSystem", "RelaxationSpec",
    "effective_hamiltonian", "eigendecompose", "robust_eigendecompose",
    "yield_closed_form", "escape_yield", "trajectory", "vec", "unvec",
    "commutation_superoperator", "build_liouvillian", "spectral_density",
    "nz_relaxation", "yield_liouville", "coherent_yield", "relaxed_yield",
    "OrientationSet", "sample_orientations", "anisotropy", "partial_trace_nuclei",
    "relative_entropy_coherence", "time_integrated_coherence", "coherence_statistics",
    "AxisSpec", "OrientationSpec", "SweepGrid", "FailedCell", "SweepResult",
    "run_sweep", "factorized_kf_sweep", "hyperfine_series",
    "RunConfig", "parse_config", "load_config", "parse_grid_override",
    "apply_grid_override",
]
