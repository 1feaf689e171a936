"""Stability of the linearized dynamics: Routh-Hurwitz conditions vs spectrum."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .constants import stability_margin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RHResult:
    condition_1: float
    condition_2: float

    @property
    def stable(self) -> bool:
        return self.condition_1 > 0 and self.condition_2 > 0

    def failing(self) -> list[str]:
        out = []
        if not self.condition_1 > 0:
            out.append(f"RH condition 1 violated ({self.condition_1:.6g} <= 0)")
        if not self.condition_2 > 0:
            out.append(f"RH condition 2 violated ({self.condition_2:.6g} <= 0)")
        return out


@dataclass(frozen=True)
class StabilityReport:
    rh_condition_1: float
    rh_condition_2: float
    eig_max_real: float
    stable_rh: bool
    stable_eig: bool
    margin: float

    @property
    def agree(self) -> bool:
        return self.stable_rh == self.stable_eig

    @property
    def stable(self) -> bool:
        # RH is the primary verdict; the spectrum arbitrates disagreements.
        return self.stable_rh if self.agree else self.stable_eig

    def as_dict(self) -> dict:
        return {
            "rh_condition_1": self.rh_condition_1,
            "rh_condition_2": self.rh_condition_2,
            "eig_max_real": self.eig_max_real,
            "stable_rh": self.stable_rh,
            "stable_eig": self.stable_eig,
            "agree": self.agree,
            "stable": self.stable,
        }


def stability_rh(d) -> RHResult:
    """Evaluate both nontrivial Routh-Hurwitz conditions; stable iff both > 0.

    ``d`` needs ``wm, gamma_m, kappa, delta, G``.
    """
    w, g, k, dl, G = d.wm, d.gamma_m, d.kappa, d.delta, d.G
    d2 = dl * dl
    c1 = 2 * g * k * (
        d2 * d2
        + d2 * (g * g + 2 * g * k + 2 * k * k - 2 * w * w)
        + (g * k + k * k + w * w) ** 2
    ) + w * G * G * dl * (g + 2 * k) ** 2
    c2 = w * w * (d2 + k * k) - w * G * G * dl
    return RHResult(float(c1), float(c2))


def stability_eig(a) -> float:
    """Spectral abscissa: largest real part among the eigenvalues of ``a``."""
    ev = np.linalg.eigvals(np.asarray(a, dtype=float))
    return float(np.max(ev.real))


def analyze(d, margin: float | None = None) -> StabilityReport:
    if margin is None:
        margin = stability_margin(d.wm, d.kappa)
    rh = stability_rh(d)
    abscissa = stability_eig(d.drift)
    report = StabilityReport(
        rh_condition_1=rh.condition_1,
        rh_condition_2=rh.condition_2,
        eig_max_real=abscissa,
        stable_rh=rh.stable,
        stable_eig=abscissa < -margin,
        margin=margin,
    )
    if not report.agree:
        log.warning(
            "Routh-Hurwitz and eigenvalue verdicts disagree (max Re = %.6g, margin %.3g); using eigenvalues",
            abscissa,
            margin,
        )
    return report


def coupling_threshold(d) -> float:
    """G at which the second RH condition changes sign (inf when Δ <= 0)."""
    if d.delta <= 0:
        return float("inf")
    return float(np.sqrt(d.wm * (d.delta**2 + d.kappa**2) / d.delta))
