"""
Configuration constants for the elliptic Cauchy regularization project.
Defines numerical defaults, overflow thresholds, output schemas and the
default experiment suite.
"""

# Exponent bookkeeping: factors e^z with z above this are handled in log space.
LOG_SPACE_THRESHOLD = 300.0
# Plain-space propagators are refused once sqrt(lambda_P) * a exceeds this.
OVERFLOW_GUARD = 700.0

# Extra Gauss-Legendre nodes on top of ceil(pi * M) per dimension.
QUADRATURE_EXTRA_NODES = 20

PICARD_MAX_ITERS = 50
PICARD_TOL = 1e-12

SINE_LIPSCHITZ = 1.0
RATIONAL_LIPSCHITZ = 25 / 16
# Parameters of the named "linear" and "power" nonlinearities.
LINEAR_COEFFICIENT = 1.0
POWER_LIPSCHITZ = 1.0
POWER_ALPHA = 2.0
POWER_BOUND = 1.0

NOISE_BUDGET_FRACTION = 0.99

BOUND_RELATIVE_SLACK = 1e-9

REFERENCE_REFINEMENT = 4

EVALUATION_FRACTIONS = (0.25, 0.5, 0.75, 1.0)

DEFAULT_DIMS = [1.0, 1.0]
DEFAULT_A = 0.5
DEFAULT_MAX_INDEX = [3, 3]
DEFAULT_NX = 128
DEFAULT_K = 1
DEFAULT_K_VALUES = [1, 2, 3]
DEFAULT_GAMMAS = [1.0, 2.0]
DEFAULT_BETA_RULE = "prop"
DEFAULT_SEED = 20180101
DEFAULT_EPSILONS = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]

DEFAULT_CASES = [
    {
        "case_id": "finite_mode",
        "kind": "finite_mode",
        "modes": 3,
        "seed": 7,
        "amplitude": 1.0,
    },
    {
        "case_id": "decaying",
        "kind": "decaying",
        "modes": 3,
        "seed": 11,
        "amplitude": 1.0,
    },
    {
        "case_id": "sine",
        "kind": "nonlinear",
        "modes": 3,
        "seed": 13,
        "amplitude": 0.2,
        "nonlinearity": "sine",
    },
    {
        "case_id": "rational",
        "kind": "nonlinear",
        "modes": 3,
        "seed": 17,
        "amplitude": 0.2,
        "nonlinearity": "rational",
    },
    {"case_id": "forced", "kind": "forced", "modes": 1, "seed": 19, "amplitude": 0.5},
    {"case_id": "zero", "kind": "zero", "modes": 0, "seed": 0, "amplitude": 0.0},
]

CASE_KINDS = ["zero", "finite_mode", "decaying", "nonlinear", "forced"]
NONLINEARITY_KINDS = ["zero", "linear", "sine", "rational", "power"]

RESULT_COLUMNS = [
    "case",
    "epsilon",
    "beta",
    "k",
    "x",
    "error",
    "A",
    "rhs",
    "margin",
    "iters",
    "ms",
]

FLOAT_FORMAT = "%.17g"
CSV_SEPARATOR = ","
OUTPUT_FORMATS = ["csv", "json"]

RESULTS_DIR = ["results"]
LOGS_DIR = ["logs"]
