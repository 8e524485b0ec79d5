"""Homodyne tomography: simulate quadrature measurements of a quantum state
and reconstruct the state by pattern-function averaging or sieved maximum
likelihood, with detector-efficiency correction and metric diagnostics."""

from .errors import (DatasetFormatError, DomainError, MetadataWarning, NumericalError,
                     SamplingError, SaturationWarning, TruncationWarning)
from .estimators import (EstimateReport, SieveConfig, bernoulli_transform, choose_truncation,
                         estimate_with_efficiency, hoeffding_bound, log_likelihood,
                         pattern_estimate, project_to_physical, sieved_mle)
from .hermite import hermite_basis, hermite_basis_with_derivatives, hermite_function
from .irregular import irregular_solution, irregular_wavefunction
from .measurement import (Dataset, DatasetMeta, Sample, apply_efficiency, read_dataset,
                          sample_homodyne, sample_quadrature, write_dataset)
from .metrics import (DensityPair, QuadratureSpec, hellinger, hs_distance, kl_divergence,
                      spec_for_states, state_density_pair, state_distances, total_variation,
                      trace_distance)
from .patterns import (PatternFunctionTable, build_pattern_table, load_pattern_table,
                       pattern_function, pattern_norm_triangle_sum, pattern_sup_norm,
                       save_pattern_table)
from .states import (DensityMatrix, HermitianMatrix, StateSpec, cat, coherent, density_fn,
                     fock, make_state, minimal_dim, quadrature_density, read_state_json,
                     squeezed_vacuum, state_from_json_dict, state_to_json_dict, thermal,
                     truncation_tail, vacuum, write_state_json)
from .wigner import (RadonResult, WignerGrid, characteristic_function, radon_consistency,
                     radon_transform, wigner_function, write_wigner_csv)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
