"""
pymhe.messages
==============
"""

TYPE_ERROR = "can only register one of the following: {valid}; not {invalid}"
NAME_CONFLICT_ERROR = "{kind} name conflict at {obj}: '{name}'"
NOT_FOUND = "no command named `{name}` found"
UNKNOWN_SYSTEM = "no system named `{name}` registered; choose from: {valid}"
DIMENSION_MISMATCH = "{what} has {got} entries, expected {expected}"
NEGATIVE_CONSTANT = "{name} must be non-negative, got {value}"
NOT_POSITIVE = "{name} must be positive, got {value}"
OUT_OF_RANGE = "{name} must lie in {interval}, got {value}"
WINDOW_TOO_SHORT = (
    "measurement window at k={k} needs {needed} outputs, only {available} "
    "available"
)
STRONG_CONVEXITY = (
    "eta * l = {product:.6g} must be below 1 for the prox objective to be "
    "strongly convex"
)
LL_TOO_LARGE = "l * L = {product:.6g} exceeds 1/2; no certified step size"
EMPTY_WINDOW = "certified step-size window ({lo:.6g}, {hi:.6g}) is empty"
ETA_OUTSIDE_WINDOW = (
    "eta = {eta:.6g} lies outside the certified window ({lo:.6g}, {hi:.6g})"
)
CONVERGENCE_ERROR = (
    "prox solver did not reach tolerance {tol:.3g} within {iters} "
    "iterations (residual {residual:.3g}, sample {index})"
)
DEGENERACY_ERROR = (
    "all weights underflowed to zero at k={k} (minimum cost {min_cost:.6g})"
)
GRID_ESCAPE_ERROR = (
    "pushforward lost {fraction:.2%} of the mass outside the grid"
)
NOISE_BOUND_ERROR = (
    "{which} sample of norm {norm:.6g} exceeds bound {bound:.6g}"
)
NOT_CRITICAL = (
    "gradient norm {norm:.3g} exceeds tolerance {tol:.3g}; the second-order "
    "condition applies at critical points only"
)
UNNORMALIZED_WEIGHTS = "weights sum to {total:.17g}, expected 1"
UNEQUAL_ENSEMBLES = (
    "ensembles have {left} and {right} samples; resample to equal counts first"
)
NONUNIFORM_WEIGHTS = "ensemble weights are not uniform; resample first"
GRID_MISMATCH = "densities are defined on different grids"
GRID_DIMENSION = "grid densities support 1 or 2 dimensions, got {dim}"
LENGTH_MISMATCH = "sequences have lengths {left} and {right}"
LIPSCHITZ_WARNING = (
    "sampled {name} ratio {estimate:.6g} exceeds the declared constant "
    "{declared:.6g}"
)
SMOOTHNESS_WARNING = (
    "sampled smoothness {estimate:.6g} of the first window exceeds "
    "l_smooth = {declared:.6g}; the step size is not certified"
)
C_F1_BELOW_MODEL = (
    "c_f1 = {value:.6g} is below the constant {model:.6g} of {name}; "
    "verdict not backed"
)
INFEASIBLE_BUDGET = (
    "privacy budget infeasible for {kind}: lhs {lhs:.6g} > rhs {rhs:.6g}"
)
UNKNOWN_KEY = "unknown key `{key}` in section [{section}]"
UNKNOWN_SECTION = "unknown section [{section}]"
BAD_TYPE = "[{section}] {key} must be {expected}, got {value!r}"
BAD_CHOICE = "[{section}] {key} must be one of {choices}, got {value!r}"
CONFIG_NOT_FOUND = "config file {path} does not exist"
COMMAND_RUNNING = "running {name}"
COMMAND_PASSED = "Success: {name} finished"
WROTE_FILE = "wrote {path}"
MIN_HORIZON = "minimum horizon length T0 = {value}"
NO_MIN_HORIZON = "no horizon up to T = {t_max} has full rank on the grid"
BUDGET_FEASIBLE = "feasible (slack {slack:.6g})"
BUDGET_INFEASIBLE = "infeasible (slack {slack:.6g})"
TRIVIAL_BUDGET = "trivially feasible"
NOT_BACKED = "{verdict}, not backed"
ROW_FLAGGED = "epsilon = {epsilon:.6g} has no feasible regularization weight"
RUNTIME = "{method}: {mean:.3g} s per step over {steps} steps"
RMSE_REPORT = "{method}: RMSE {values}"
INDEPENDENT_COUPLING = (
    "horizon bound assumes independent coupling of the per-step marginals"
)
Q_MODULUS = "q(delta) modulus: {name}"
NOT_POSITIVE_DEFINITE = "stage weight must be symmetric positive definite"
STAGE_NOT_ZERO = (
    "user stage cost must vanish at zero residual, got {value:.6g}"
)
MISSING_STAGE_FN = "stage cost of kind `user` needs a callable"
BAD_STAGE_KIND = "stage cost kind must be `quadratic` or `user`, got {kind!r}"
EMPTY_GRID = "probe grid is empty"
BAD_SCHEDULE = "regularization weights must lie in (0, 1], got {value!r}"
NEGATIVE_WEIGHTS = "ensemble weights must be non-negative"
EMPTY_ENSEMBLE = "ensemble has no samples"
GRID_SHAPE = "grid values have shape {got}, expected {expected}"
NEGATIVE_DENSITY = "grid density values must be non-negative"
FAILED = "Failed: returned non-zero exit status {returncode}"
