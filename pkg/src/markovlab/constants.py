"""Numerical tolerances and classification thresholds.

Every threshold used to decide a pass/fail or a classification lives here so
that runs can override them in one place (see ``RunConfig.tolerances``).
"""

# linear algebra
HERMITIAN_TOL = 1e-12          # relative to max(1, max|A|)
UNITARY_TOL = 1e-10
EIG_RESIDUAL_TOL = 1e-10       # relative to max(1, ||h||)
TRACE_PRESERVE_TOL = 1e-12

# density-matrix invariants
RHO_HERMITIAN_TOL = 1e-10
RHO_TRACE_TOL = 1e-9
RHO_POSITIVITY_TOL = 1e-9

# model construction
NORMALIZATION_TOL = 1e-12
IDEMPOTENCY_TOL = 1e-10
TRUNCATION_SAFETY = 5
TOP_LEVEL_POPULATION_TOL = 1e-8
COMMUTATION_TOL = 1e-10        # relative to ||h_e|| ||h_se||

# closed-form series
SERIES_TAIL_TOL = 1e-10
OMEGA_RELATIVE_TAIL_TOL = 1e-12
MAX_SERIES_INDEX = 400

# diagnostics
COMMUTING_TOL = 1e-10          # relative to ||H_E|| ||H_SE|| + 1
SCALAR_RESIDUAL_TOL = 1e-8     # relative to ||H_E|| ||H_SE|| + 1
GUARD_TOP_FRACTION = 0.25      # fraction of each Fock ladder excluded by the guard
CONSTANT_DIAGONAL_TOL = 1e-10
GAUSSIAN_R2 = 0.99
MONOTONE_SLACK = 1e-9
DECAY_FLOOR = 0.01
REVIVAL_RATIO = 0.1
MIN_SAMPLES = 32
RANK_ONE_TOL = 1e-8
DISSIPATION_CONSTANT_TOL = 1e-8

# Green's functions
GREENS_STEP_GUARD = 0.1
GREENS_COND_LIMIT = 1e12
FOURIER_TAIL_TOL = 1e-8
CONTRACTIVITY_TOL = 1e-6
