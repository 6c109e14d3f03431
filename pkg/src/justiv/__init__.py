"""Exact finite-sample behaviour of just-identified IV under normal reduced forms."""
from .bias import (
    BiasQuery,
    bias_band,
    bias_ratio_conditional_to_unconditional,
    betau_mean_bias,
    iv_median_bias_bound,
    median_bias_exact,
    median_to_mean_bias_ratio,
    scaled_iv_cdf,
    scaled_u_cdf,
)
from .endogeneity import (
    StudySummary,
    calibrate,
    estimate_rho,
    recover_cov_rf,
    rho_bound_measurement_error,
    rho_bound_over_beta_range,
    rho_ovb_approx,
    rho_r2_decomposition,
)
from .estimators import ar_t, iv_estimate, iv_se, unbiased_estimate, wald_t
from .model import (
    DesignPoint,
    ModelParams,
    ReducedFormDraw,
    canonical_model,
    design_from_model,
    ef_from_first_stage_fit,
)
from .oracle import SimulationPlan, mc_bias_report, mc_rejection_rate, sample_draws
from .rejection import (
    RejectionQuery,
    endogeneity_cutoff,
    rejection_grid,
    rejection_rate,
    worst_case_rejection,
)

__version__ = "0.1.0"
