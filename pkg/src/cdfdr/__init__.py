"""One-step local false discovery rate estimation via comparison density.

The estimator transforms test statistics to p-values under a user-supplied
null, flattens their density with a fitted beta, models the residual with a
thresholded orthonormal Legendre series, estimates the true-null proportion
by a minimum-deviance scan, and reads the local fdr off the assembled
comparison density in a single step.
"""

from .betafit import BetaFit, fit_beta_mle, smooth_pvalues
from .density import (
    CoefficientSet,
    ComparisonDensityModel,
    clipped_measure,
    eval_comparison_density,
    eval_comparison_density_many,
    eval_smooth_density,
    eval_smooth_density_many,
    integrate_comparison_density,
    reconstruct_density,
    score_coefficients,
)
from .errors import (
    CdfdrError,
    ConfigError,
    DegenerateSampleError,
    DomainError,
    EstimationError,
    InputError,
    InsufficientDataError,
    PipelineError,
    SimulationError,
)
from .legendre import M_MAX, basis_matrix, basis_row, shifted_legendre
from .pi0 import DeviancePath, estimate_pi0
from .pipeline import (
    CdfrModel,
    DiscoveryRecord,
    DiscoveryReport,
    NullSpec,
    discoveries,
    fit_cdfdr,
    integrate_nonnull_density,
    local_fdr,
    local_fdr_many,
    nonnull_density,
    t_to_z,
    to_pvalues,
    u_of_t,
    u_of_t_many,
)
from .simulate import (
    EstimatorConfig,
    MixtureNormalDesign,
    MixtureUniformDesign,
    SimReport,
    gen_mixture_normal,
    gen_mixture_uniform,
    run_replicates,
    true_fdr_mixture_normal,
    true_fdr_mixture_uniform,
)
from .special import (
    beta_cdf,
    beta_cdf_many,
    beta_pdf,
    beta_pdf_many,
    digamma,
    log_gamma,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    regularized_incomplete_beta,
    regularized_incomplete_beta_many,
    student_t_cdf,
    student_t_pdf,
)

__version__ = "0.1.0"
