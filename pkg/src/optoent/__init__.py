"""Stationary optomechanical entanglement between a cavity mode and a vibrating mirror."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DerivedModel,
    PhysicalParams,
    derive_constants,
    resolve_model,
    solve_steady_state,
    steady_state_from_detuning,
)
from .lyapunov import CovarianceMatrix, check_physicality, integrate_cm_oracle, solve_lyapunov  # noqa: E402
from .entanglement import entanglement_report, eta_minus, log_negativity, simon_test  # noqa: E402
from .stability import analyze, stability_eig, stability_rh  # noqa: E402
from .kernels import DEFAULT_BACKEND as KERNEL_BACKEND  # noqa: E402
