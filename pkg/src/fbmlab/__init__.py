"""fbmlab: a simulation laboratory for pathwise exponential stability of
evolution equations driven by fractional Brownian motion with H > 1/2."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConsistencyError,
    ConvergenceError,
    DomainError,
    FbmLabError,
    FitError,
    GenerationError,
    NumericalError,
    ParameterError,
)
from .fbm import CovarianceSpec, fbm_covariance, generate_fbm_hilbert, generate_fbm_scalar
from .holder import (
    ExponentChain,
    damped_holder_norm,
    frac_deriv_left,
    frac_deriv_right,
    holder_seminorm,
    window_seminorm,
)
from .paths import ScalarPath, TimeGrid, VectorPath, read_path_csv, wiener_shift, write_path_csv
from .semigroup import (
    SemigroupConstants,
    SpectralOperator,
    apply_frac_power,
    apply_semigroup,
    dirichlet_laplacian_1d,
    estimate_cS,
)
from .young import (
    OperatorPath,
    change_of_variable_check,
    convolution_young_integral,
    young_integral_fracderiv,
    young_integral_sums,
)
from .dynamics import (
    NonlinearitySpec,
    SolveConfig,
    linear_drift_nonlinearity,
    mild_residual,
    sine_nonlinearity,
    solve_mild,
    splitting_check,
    zero_nonlinearity,
)
from .stopping import (
    MonteCarloEstimate,
    StoppingConfig,
    StoppingSequence,
    StopStats,
    backward_stopping_time,
    bound_K,
    build_stopping_sequence,
    check_linear_growth,
    comparison_check,
    compute_D,
    count_window_stats,
    estimate_d,
    estimate_dbar,
    forward_stopping_time,
)
from .stability import (
    ChainConstants,
    RateInputs,
    calibrate_chain_constants,
    compute_p_coefficients,
    discrete_gronwall_bound,
    estimate_moment_constant,
    fit_decay_rate,
    gronwall_chain_check,
    rho_star,
    sufficient_condition_K,
    verify_exponential_stability,
)
