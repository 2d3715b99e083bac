"""Numerical constants shared by the math core and the compiled kernels."""

#: Probability floor applied before any log or power.
EPS_FLOOR = 1e-8

#: Half-width of the band around alpha in {0, 1} that dispatches to the KL limits.
ALPHA_SWITCH = 1e-4
