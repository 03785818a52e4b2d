"""Numerical tolerances shared by every module.

Kept in one table so that a tolerance change is a one-line edit.
"""

# operator_algebra
HERMITIAN_RTOL = 1e-12          # relative to max |entry|
NORM_ATOL = 1e-10               # pure-state normalisation
TRACE_ATOL = 1e-10              # density-matrix trace
PSD_ATOL = 1e-9                 # most negative eigenvalue allowed
EIG_RESIDUAL_RTOL = 1e-9        # ||Hv - Ev|| relative to ||H||
ORTHONORMAL_ATOL = 1e-9
UNITARY_ATOL = 1e-9
MAX_DIM = 2 ** 16               # largest operator dimension built
JACOBI_MAX_DIM = 64
JACOBI_MAX_SWEEPS = 100

# model
SQUEEZE_MAX_R = 3.0
KRON_ASSOC_ATOL = 1e-12

# states / observables
IMAG_ATOL = 1e-10
VARIANCE_CLAMP = 1e-10          # negative variances above -this are clamped to 0
NORM_LOSS = 1e-6                # Fock-tail weight that flags an inadequate truncation
WIGNER_TAIL_WARN = 1e-2
WIGNER_IMAG_ATOL = 1e-9

# groundstate
DEGENERACY_RTOL = 1e-8          # gap < this * ||H|| flags degeneracy
SP_DEGENERACY_GAP = 1e-3        # in units of omega; switch to 2-d projector fidelity
NORM_DRIFT = 1e-6               # adiabatic propagation abort threshold

# noise
KRAUS_COMPLETENESS_ATOL = 1e-12
# |lt^2 - stiffness| below this (relative) counts as exactly critical
CRITICAL_RTOL = 1e-13
