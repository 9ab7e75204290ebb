"""Transfer-operator and invariant-density estimation from map samples."""
from ._backend import BACKEND
from .analysis import (ErrorReport, ReferenceDensity, compare_at_optimum, convergence_rate,
                       evaluation_grid, logistic_arcsine, pointwise_mse, sweep_histogram, sweep_kde,
                       trunc_normal, ub_constants, uniform)
from .dynamics import (MapSpec, NoiseSpec, SampleMode, SampleSet, generate_ensemble,
                       generate_evolved_ensemble, generate_orbit, sample_truncated_normal,
                       truncated_normal_cdf, truncated_normal_pdf)
from .errors import DomainError, NumericalError
from .histdens import (HistDensity, bin_index, hist_bias_bound, hist_eval, hist_fit,
                       hist_mse_upper_bound, hist_optimal_K)
from .kde import (KdeDensity, KernelKind, KernelSpec, kde_bias_bound, kde_eval, kde_eval_grid, kde_fit,
                  kde_mse_upper_bound, kde_optimal_delta, kernel_moments)
from .operator import (Method, StochasticMatrix, apply_fp_exact, kde_transfer_matrix,
                       noisy_kernel_matrix_exact, row_tv, ulam_matrix_exact, ulam_matrix_from_pairs)
from .spectral import StationaryResult, leading_left_eigenvector, stationary_to_density

__version__ = "0.1.0"
