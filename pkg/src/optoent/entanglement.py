"""Two-mode Gaussian entanglement: η⁻, logarithmic negativity, Simon criterion.

Two independent routes to η⁻ (smallest symplectic eigenvalue of the partially
transposed CM) are provided: the closed form in the determinant invariants and
the spectrum of iΩṼ. :func:`entanglement_report` runs both.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import PATH_AGREEMENT_TOL, SIMON_TOL
from .errors import PathDisagreementWarning, UnphysicalState
from .lyapunov import CovarianceMatrix, symplectic_eigenvalues

_PT = np.diag([1.0, 1.0, 1.0, -1.0])


def _mat(v) -> np.ndarray:
    m = np.asarray(v.matrix if isinstance(v, CovarianceMatrix) else v, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-mode covariance matrix, got {m.shape}")
    return m


def det2(m) -> float:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def det4(m) -> float:
    # Laplace expansion along rows 0-1: 2x2 minors times complementary minors.
    total = 0.0
    cols = range(4)
    for j in cols:
        for k in cols:
            if k <= j:
                continue
            rest = [c for c in cols if c not in (j, k)]
            top = m[0][j] * m[1][k] - m[0][k] * m[1][j]
            bottom = m[2][rest[0]] * m[3][rest[1]] - m[2][rest[1]] * m[3][rest[0]]
            sign = -1.0 if (j + k + 1) % 2 else 1.0
            total += sign * top * bottom
    return total


def invariants(v) -> dict:
    m = _mat(v)
    da = det2(m[0:2, 0:2])
    db = det2(m[2:4, 2:4])
    dc = det2(m[0:2, 2:4])
    return {"det_A": da, "det_B": db, "det_C": dc, "det_V": det4(m), "sigma": da + db - 2 * dc}


def eta_minus(v) -> float:
    """Closed form η⁻ = 2^{-1/2} [Σ − (Σ² − 4 det V)^{1/2}]^{1/2}.

    Evaluated as η⁻² = 2 det V / (Σ + √(Σ² − 4 det V)) to avoid cancellation
    when the mirror is hot.
    """
    inv = invariants(v)
    s, dv = inv["sigma"], inv["det_V"]
    if not dv > 0:
        raise UnphysicalState(f"det V = {dv:.6g} is not positive")
    disc = s * s - 4 * dv
    if disc < 0:
        if disc < -1e-12 * s * s:
            raise UnphysicalState(f"negative discriminant Σ² − 4 det V = {disc:.6g}")
        disc = 0.0
    denom = s + math.sqrt(disc)
    if not denom > 0:
        raise UnphysicalState(f"Σ = {s:.6g} not positive")
    return math.sqrt(2 * dv / denom)


def eta_minus_spectral(v) -> float:
    """Smallest symplectic eigenvalue of the partial transpose (cavity Y -> -Y)."""
    m = _mat(v)
    return float(symplectic_eigenvalues(_PT @ m @ _PT)[0])


def log_neg_from_eta(eta: float) -> float:
    return max(0.0, -math.log(2 * eta))


def log_negativity(v) -> float:
    """E_N = max[0, −ln 2η⁻]."""
    return log_neg_from_eta(eta_minus(v))


def simon_test(v) -> bool:
    """Simon PPT criterion 4 det V < Σ − 1/4; boundary band counts as separable."""
    inv = invariants(v)
    return 4 * inv["det_V"] < inv["sigma"] - 0.25 - SIMON_TOL


@dataclass(frozen=True)
class EntanglementReport:
    eta_minus: float
    log_neg: float
    simon_entangled: bool
    sigma: float
    det_V: float
    det_A: float
    det_B: float
    det_C: float
    eta_minus_spectral: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def entanglement_report(v) -> EntanglementReport:
    inv = invariants(v)
    eta = eta_minus(v)
    eta_sp = eta_minus_spectral(v)
    if abs(eta - eta_sp) > PATH_AGREEMENT_TOL * max(1.0, eta):
        warnings.warn(
            f"closed-form η⁻ = {eta!r} and spectral η⁻ = {eta_sp!r} disagree",
            PathDisagreementWarning,
            stacklevel=2,
        )
    return EntanglementReport(
        eta_minus=eta,
        log_neg=log_neg_from_eta(eta),
        simon_entangled=4 * inv["det_V"] < inv["sigma"] - 0.25 - SIMON_TOL,
        sigma=inv["sigma"],
        det_V=inv["det_V"],
        det_A=inv["det_A"],
        det_B=inv["det_B"],
        det_C=inv["det_C"],
        eta_minus_spectral=eta_sp,
    )
