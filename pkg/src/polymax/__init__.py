"""polymax: semiparametric estimation for non-Gaussian data.

Higher-order moment machinery, polynomial-maximization estimators (with a
second-order least-squares cross-check), second-order Volterra kernel
adaptation, polynomial CUSUM change detection, seeded signal generators,
and a Monte-Carlo experiment harness.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .changepoint import (
    CusumDetector,
    DetectionRecord,
    PolynomialScore,
    build_polynomial_score,
    calibrate_threshold,
    run_detector,
)
from .moments import (
    CumulantSet,
    Distribution,
    InitialMomentVector,
    analytic_cumulants,
    cumulants_from_raw_moments,
    raw_moments_from_cumulants,
    sample_cumulants,
)
from .pmm import (
    MomentModel,
    PmmEstimate,
    check_gradient,
    location_model,
    optimal_coefficients,
    pmm2_estimate_location,
    pmm2_regression,
    pmm3_estimate_location,
    pmm_dispatch,
    pmm_estimate,
    predicted_g_location,
    sample_basis_means,
    variance_reduction_g2,
)
from .regression import (
    ResponseModel,
    exponential_response,
    fit_least_squares,
    gauss_newton,
    growth_response,
    linear_response,
)
from .signals import (
    SignalSpec,
    SpectralMetrics,
    draw,
    generate,
    read_signal_f64,
    rng_for,
    spectral_metrics,
    write_signal_csv,
    write_signal_f64,
)
from .sls import SlsEstimate, SlsProblem, sls_default_omega, sls_estimate, sls_objective
from .stochpoly import (
    BasisFamily,
    CorrelantMatrix,
    StochasticPolynomial,
    basis_size,
    build_correlant_matrix,
    empirical_correlants,
    expand_lag_basis,
    polynomial_variance,
)
from .volterra import (
    AdaptationReport,
    VolterraKernels,
    coefficients_to_kernels,
    kernels_to_coefficients,
    mmse_adapt,
    moment_adapt,
    predict_from_coefficients,
    volterra_predict,
)
