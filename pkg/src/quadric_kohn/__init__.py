"""Fundamental solutions and Szego kernels of the Kohn Laplacian on quadric CR manifolds."""

from .classifier import (SphereSampler, classify_degree, epsilon_signs, gamma_report,
                         sample_signatures, signature_set)
from .closed_forms import (heisenberg, heisenberg_N, heisenberg_szego, m1, m2, m2_power_law, m3,
                           m3_corollary, preset, product_heisenberg, product_heisenberg_szego)
from .config import JobConfig, emit, parse_config
from .errors import (ConfigError, DimensionError, DomainError, EigenConvergenceError,
                     QuadricError, ToleranceError)
from .green import (EvalPoint, FormCoefficients, Formula, QuadratureSpec, SphereRule, alpha_slice,
                    eval_batch, eval_green, eval_szego, fit_power_law_constant, integrate_sphere,
                    n_transform_radial)
from .heat import (GridSpec, TransformPoint, box_transformed_residual, heat_alpha_slice, heat_mass,
                   heat_transform, mass_closed_form, n_transform_from_heat, szego_transform)
from .levi import (QuadricForm, SpectralData, basis_weights, eigen_coordinates, inverse_minor,
                   minor_coefficient, multi_indices, spectral, spectral_batch)

__version__ = "0.1.0"
