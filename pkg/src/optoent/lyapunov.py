"""Stationary covariance matrix of a linear system du = A u dt + noise.

Vacuum variance convention: 1/2 per quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .constants import LYAPUNOV_RESIDUAL_TOL, PHYSICALITY_TOL, STAB_REL
from .errors import ConfigError, NonConvergence, NumericalFailure, UnstableSystem


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetrized covariance matrix; blocks refer to the (mirror, cavity) 4x4 part."""

    matrix: np.ndarray

    def __post_init__(self):
        v = np.array(self.matrix, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"covariance matrix must be square, got shape {v.shape}")
        v = 0.5 * (v + v.T)
        v.flags.writeable = False
        object.__setattr__(self, "matrix", v)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def a_block(self) -> np.ndarray:
        return self.matrix[0:2, 0:2]

    @property
    def b_block(self) -> np.ndarray:
        return self.matrix[2:4, 2:4]

    @property
    def c_block(self) -> np.ndarray:
        return self.matrix[0:2, 2:4]

    def reduced(self, n: int = 4) -> "CovarianceMatrix":
        return CovarianceMatrix(self.matrix[:n, :n])

    def row_major(self) -> list[float]:
        return [float(x) for x in self.matrix.ravel()]


def _as_array(v) -> np.ndarray:
    return np.asarray(v.matrix if isinstance(v, CovarianceMatrix) else v, dtype=float)


def default_margin(a: np.ndarray) -> float:
    return STAB_REL * float(np.max(np.abs(a)))


def _check_stable(a: np.ndarray, margin: float | None) -> np.ndarray:
    if margin is None:
        margin = default_margin(a)
    ev = np.linalg.eigvals(a)
    top = float(np.max(ev.real))
    if top >= -margin:
        raise UnstableSystem(f"drift matrix not Hurwitz: max Re(eig) = {top:.6g} >= -{margin:.3g}")
    return ev


def solve_lyapunov(a, d, margin: float | None = None) -> CovarianceMatrix:
    """Solve A V + V Aᵀ = −D by a dense Kronecker-sum solve.

    Works for any size (4x4 cavity+mirror, 6x6 with the readout cavity).
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    n = a.shape[0]
    _check_stable(a, margin)
    eye = np.eye(n)
    k = np.kron(a, eye) + np.kron(eye, a)
    rhs = -d.reshape(-1)
    v = np.linalg.solve(k, rhs)
    # one step of iterative refinement
    v = v + np.linalg.solve(k, rhs - k @ v)
    v = v.reshape(n, n)
    v = 0.5 * (v + v.T)
    dn = np.linalg.norm(d)
    res = np.linalg.norm(a @ v + v @ a.T + d)
    if res > LYAPUNOV_RESIDUAL_TOL * (dn if dn > 0 else 1.0):
        raise NumericalFailure(f"Lyapunov residual {res / max(dn, 1e-300):.3g} exceeds tolerance")
    return CovarianceMatrix(v)


def _trapezoid_doubling(a, d, h, levels):
    """Trapezoid sum of M(s) D M(s)ᵀ on [0, 2**levels * h], M(s) = exp(A s)."""
    m = expm(a * h)
    s = d.copy()
    p = m
    for _ in range(levels):
        s = s + p @ s @ p.T
        p = p @ p
    f_end = p @ d @ p.T
    return h * (s - 0.5 * d + 0.5 * f_end), f_end


def integrate_cm_oracle(a, d, horizon: float | None = None, step: float | None = None,
                        margin: float | None = None) -> CovarianceMatrix:
    """Quadrature of V = ∫₀^∞ M(s) D M(s)ᵀ ds.

    Slow independent check for :func:`solve_lyapunov`, not a production path.
    The grid is uniform with 2**k points, summed by doubling, and the
    trapezoid results at h and h/2 are Richardson-combined.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    ev = _check_stable(a, margin)
    decay = -float(np.max(ev.real))
    if horizon is None:
        horizon = 30.0 / decay
    elif horizon < 20.0 / decay:
        raise ConfigError(f"horizon {horizon:.3g} shorter than 20 decay times ({20 / decay:.3g})")
    fastest = float(np.max(np.abs(ev)))
    if step is None:
        step = 0.01 / fastest
    levels = max(1, math.ceil(math.log2(horizon / step)))
    coarse, _ = _trapezoid_doubling(a, d, step, levels)
    fine, f_end = _trapezoid_doubling(a, d, step / 2, levels + 1)
    v = (4.0 * fine - coarse) / 3.0
    vn = np.linalg.norm(v)
    tail = np.linalg.norm(f_end) / (2.0 * decay)
    if vn > 0 and tail > 1e-8 * vn:
        raise NonConvergence(f"integral tail estimate {tail / vn:.3g} of the norm exceeds 1e-8")
    return CovarianceMatrix(v)


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(v) -> np.ndarray:
    """Williamson symplectic eigenvalues (ascending), from |eig(iΩV)|."""
    v = _as_array(v)
    omega = symplectic_form(v.shape[0] // 2)
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ v).real))
    return ev[::2]


def check_physicality(v) -> tuple[bool, float]:
    """Uncertainty-principle check V + iΩ/2 >= 0; returns (ok, min symplectic eigenvalue)."""
    nu = float(symplectic_eigenvalues(v)[0])
    return nu >= 0.5 - PHYSICALITY_TOL, nu
