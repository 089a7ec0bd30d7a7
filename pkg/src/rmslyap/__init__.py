"""Top Lyapunov exponents of random systems A D(omega) and their geometric-mean lower bound."""
__version__ = "0.1.0"

from .averaging import (
    AveragedSystem,
    EpsilonLadder,
    TheoremReport,
    averaged_system,
    check_main_theorem,
    check_main_theorem_general,
    epsilon_ladder,
)
from .cocycle import (
    LyapunovEstimate,
    RandomMatrixSystem,
    ScaledProduct,
    cocycle_product,
    estimate_kingman_bound,
    estimate_lyapunov_trajectory,
    lyapunov_bestof,
)
from .ergodic import (
    EnvPath,
    IIDDriver,
    MarkovDriver,
    RotationDriver,
    backward_path_construction,
    birkhoff_average,
    stationary_distribution,
)
from .errors import ConvergenceError, GatingError, InvariantViolation, NotErgodicError, ValidationError
from .matrix import (
    SpectralBracket,
    check_subinvariance,
    classify,
    column_stats,
    matmul,
    matrix_norm,
    scale_columns,
    spectral_radius,
)
from .principal import (
    CesaroTrace,
    PrincipalPair,
    cesaro_proof_trace,
    integrability_bound_check,
    lambda_from_rho,
    principal_pair,
)
