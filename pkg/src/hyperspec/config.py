"""Named numerical constants used across the package."""

# relative slack allowed when checking the functional inequality on discrete eigenfunctions
FUNCTIONAL_TOL = 0.02

# generalized residual ||K v - lam M v||_{M^-1} <= EIG_RESIDUAL_TOL * |lam|
EIG_RESIDUAL_TOL = 1e-9

# largest problem handed to the dense solver
DENSE_MAX_DOF = 2000

# eigenvalues closer than this (relative) are reported as one cluster
CLUSTER_RTOL = 1e-8

# satisfied <=> lhs <= rhs + SATISFY_RTOL * max(|lhs|, |rhs|, 1)
SATISFY_RTOL = 1e-12

# refinement ladder guard for scenarios
MAX_REFINEMENTS = 8

# central-difference step for the conformal Laplacian check
FD_STEP = 1e-4

SCHEMA_VERSION = 1
