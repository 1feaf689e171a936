"""Physical constants and numerical tolerances shared across modules."""

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
C_LIGHT = 2.99792458e8  # m / s

# Planck occupation underflows below 1e-300 past this exponent.
NBAR_EXPONENT_CUTOFF = 700.0

# Relative margin: eigenvalues with Re > -STAB_REL * max(w_m, kappa) count as unstable.
STAB_REL = 1e-6

# Numerical zero for the logarithmic negativity (threshold search).
EN_FLOOR = 1e-6

SIMON_TOL = 1e-9
PHYSICALITY_TOL = 1e-9
LYAPUNOV_RESIDUAL_TOL = 1e-10
PATH_AGREEMENT_TOL = 1e-8

# Finesse -> amplitude decay rate conventions.
#   linewidth:       kappa = pi c / (F L)      (default; keeps the 5 ng preset stable at Delta = w_m)
#   half-linewidth:  kappa = pi c / (2 F L)
KAPPA_CONVENTIONS = {"linewidth": 1.0, "half-linewidth": 0.5}
DEFAULT_KAPPA_CONVENTION = "linewidth"


def stability_margin(wm: float, kappa: float) -> float:
    return STAB_REL * max(abs(wm), abs(kappa))
