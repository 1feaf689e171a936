"""Experimental parameters -> linearized optomechanical model.

Quadrature ordering everywhere is ``(dq, dp, dX, dY)``: mirror position and
momentum, then the cavity amplitude and phase quadratures. All frequencies are
angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .constants import (
    C_LIGHT,
    DEFAULT_KAPPA_CONVENTION,
    HBAR,
    K_B,
    KAPPA_CONVENTIONS,
    NBAR_EXPONENT_CUTOFF,
    stability_margin,
)
from .errors import ConfigError
from . import stability

DETUNING_KINDS = ("effective", "bare")


@dataclass(frozen=True)
class PhysicalParams:
    """User-facing inputs in SI units.

    ``detuning`` is either the effective detuning Δ (``detuning_kind="effective"``,
    the x-axis of the detuning sweeps) or the bare cavity-laser detuning Δ0.
    """

    cavity_length: float
    wavelength: float
    power: float
    wm: float
    gamma_m: float
    mass: float
    temperature: float
    finesse: float
    detuning: float = 0.0
    detuning_kind: str = "effective"
    kappa_convention: str = DEFAULT_KAPPA_CONVENTION

    def __post_init__(self):
        for name in ("cavity_length", "wavelength", "wm", "mass", "finesse"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}")
        for name in ("power", "gamma_m", "temperature"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and >= 0, got {v!r}")
        if not math.isfinite(self.detuning):
            raise ConfigError("detuning must be finite")
        if self.detuning_kind not in DETUNING_KINDS:
            raise ConfigError(f"detuning_kind must be one of {DETUNING_KINDS}")
        if self.kappa_convention not in KAPPA_CONVENTIONS:
            raise ConfigError(
                f"unknown kappa convention {self.kappa_convention!r}; "
                f"choose from {sorted(KAPPA_CONVENTIONS)}"
            )
        if not self.quality_factor > 10:
            raise ConfigError(
                f"quality factor w_m/gamma_m = {self.quality_factor:g} must exceed 10 "
                "(Markovian Brownian-noise limit)"
            )

    @property
    def quality_factor(self) -> float:
        return math.inf if self.gamma_m == 0 else self.wm / self.gamma_m

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ModelConstants:
    kappa: float
    w0: float
    wc: float
    G0: float
    E: float
    nbar: float


@dataclass(frozen=True)
class SteadyStateBranch:
    intensity: float  # alpha_s**2
    delta: float
    stable: bool
    branch_index: int


@dataclass(frozen=True)
class DerivedModel:
    """Linearized model around one steady state.

    ``drift`` and ``diffusion`` are built from the rates on construction.
    Fields that only make sense for a physical drive (G0, E, alpha_s, ...)
    are NaN for models assembled with :meth:`from_rates`.
    """

    wm: float
    gamma_m: float
    kappa: float
    delta: float
    G: float
    nbar: float
    w0: float = math.nan
    wc: float = math.nan
    G0: float = math.nan
    E: float = math.nan
    alpha_s: float = math.nan
    bare_delta: float = math.nan
    q_s: float = math.nan
    branch_count: int = 1
    drift: np.ndarray = field(init=False, repr=False, compare=False)
    diffusion: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = build_drift(self)
        d = build_diffusion(self)
        a.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "diffusion", d)

    @classmethod
    def from_rates(cls, wm, gamma_m, kappa, delta, G, nbar=0.0) -> "DerivedModel":
        return cls(wm=wm, gamma_m=gamma_m, kappa=kappa, delta=delta, G=G, nbar=nbar)

    @property
    def stability_margin(self) -> float:
        return stability_margin(self.wm, self.kappa)


def kappa_from_finesse(finesse: float, length: float, convention: str = DEFAULT_KAPPA_CONVENTION) -> float:
    try:
        factor = KAPPA_CONVENTIONS[convention]
    except KeyError:
        raise ConfigError(f"unknown kappa convention {convention!r}") from None
    return factor * math.pi * C_LIGHT / (finesse * length)


def thermal_occupation(wm: float, temperature: float) -> float:
    """Bose-Einstein occupation of a mode at ``wm`` (rad/s) and ``temperature`` (K)."""
    if temperature <= 0:
        return 0.0
    kt = K_B * temperature
    # kt underflows to 0 for subnormal temperatures; compare before dividing
    if HBAR * wm > NBAR_EXPONENT_CUTOFF * kt:
        return 0.0
    x = HBAR * wm / kt
    if x > NBAR_EXPONENT_CUTOFF:
        return 0.0
    return 1.0 / math.expm1(x)


def derive_constants(p: PhysicalParams, bare_detuning: Optional[float] = None) -> ModelConstants:
    """κ, laser/cavity frequencies, bare coupling G0, drive E and n̄.

    The cavity frequency is w0 + Δ0. Without a bare detuning (effective-detuning
    input) it is provisionally w0; :func:`steady_state_from_detuning` refines it.
    """
    if bare_detuning is None and p.detuning_kind == "bare":
        bare_detuning = p.detuning
    kappa = kappa_from_finesse(p.finesse, p.cavity_length, p.kappa_convention)
    w0 = 2 * math.pi * C_LIGHT / p.wavelength
    wc = w0 + (bare_detuning if bare_detuning is not None else 0.0)
    G0 = (wc / p.cavity_length) * math.sqrt(HBAR / (p.mass * p.wm))
    E = math.sqrt(2 * p.power * kappa / (HBAR * w0))
    return ModelConstants(
        kappa=kappa, w0=w0, wc=wc, G0=G0, E=E, nbar=thermal_occupation(p.wm, p.temperature)
    )


def build_drift(d) -> np.ndarray:
    wm, g, k, dl, G = d.wm, d.gamma_m, d.kappa, d.delta, d.G
    return np.array(
        [
            [0.0, wm, 0.0, 0.0],
            [-wm, -g, G, 0.0],
            [0.0, 0.0, -k, dl],
            [G, 0.0, -dl, -k],
        ]
    )


def build_diffusion(d) -> np.ndarray:
    return np.diag([0.0, d.gamma_m * (2 * d.nbar + 1), d.kappa, d.kappa])


def _intensity_roots(E: float, kappa: float, G0: float, wm: float, bare_delta: float) -> list[float]:
    """Non-negative roots x = α_s² of x (κ² + (Δ0 − G0² x / w_m)²) = E², ascending."""
    if E == 0:
        return [0.0]
    s = G0 * G0 / wm
    if s == 0:
        return [E * E / (kappa * kappa + bare_delta * bare_delta)]
    # y = s x / κ, δ0 = Δ0 / κ:  y (1 + (δ0 − y)²) = η
    d0 = bare_delta / kappa
    eta = E * E * s / kappa**3
    raw = np.roots([1.0, -2.0 * d0, 1.0 + d0 * d0, -eta])
    ys = []
    for r in raw:
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
            continue
        y = max(r.real, 0.0)
        for _ in range(50):
            f = y * (1 + (d0 - y) ** 2) - eta
            fp = 1 + d0 * d0 - 4 * d0 * y + 3 * y * y
            if fp == 0:
                break
            step = f / fp
            y -= step
            if abs(step) <= 1e-15 * max(1.0, abs(y)):
                break
        if y >= 0 and not any(abs(y - z) <= 1e-9 * max(1.0, y) for z in ys):
            ys.append(y)
    ys.sort()
    return [kappa * y / s for y in ys]


def _model_at(p: PhysicalParams, c: ModelConstants, intensity: float, bare_delta: float, branches: int) -> DerivedModel:
    alpha = math.sqrt(intensity)
    delta = bare_delta - c.G0**2 * intensity / p.wm
    return DerivedModel(
        wm=p.wm,
        gamma_m=p.gamma_m,
        kappa=c.kappa,
        delta=delta,
        G=c.G0 * alpha * math.sqrt(2),
        nbar=c.nbar,
        w0=c.w0,
        wc=c.wc,
        G0=c.G0,
        E=c.E,
        alpha_s=alpha,
        bare_delta=bare_delta,
        q_s=c.G0 * intensity / p.wm,
        branch_count=branches,
    )


def solve_steady_state(p: PhysicalParams, bare_delta: float) -> list[SteadyStateBranch]:
    """All stationary intracavity intensities for the bare detuning Δ0, ascending."""
    return [
        SteadyStateBranch(
            intensity=m.alpha_s**2,
            delta=m.delta,
            stable=stability.analyze(m).stable,
            branch_index=i,
        )
        for i, m in enumerate(_branch_models(p, bare_delta))
    ]


def _branch_models(p: PhysicalParams, bare_delta: float) -> list[DerivedModel]:
    c = derive_constants(p, bare_detuning=bare_delta)
    roots = _intensity_roots(c.E, c.kappa, c.G0, p.wm, bare_delta)
    return [_model_at(p, c, x, bare_delta, len(roots)) for x in roots]


def steady_state_from_detuning(p: PhysicalParams, delta: float) -> DerivedModel:
    """Model at a prescribed effective detuning Δ (α_s real, Δ0 back-computed)."""
    if not math.isfinite(delta):
        raise ConfigError("effective detuning must be finite")
    c = derive_constants(p, bare_detuning=0.0)
    bare = delta
    # G0 depends on w_c = w0 + Δ0, which depends on G0; contraction ~1e-7 per pass.
    for _ in range(10):
        intensity = c.E**2 / (c.kappa**2 + delta**2)
        new_bare = delta + c.G0**2 * intensity / p.wm
        c = derive_constants(p, bare_detuning=new_bare)
        if new_bare == bare:
            break
        bare = new_bare
    intensity = c.E**2 / (c.kappa**2 + delta**2)
    bare = delta + c.G0**2 * intensity / p.wm
    n_roots = len(_intensity_roots(c.E, c.kappa, c.G0, p.wm, bare))
    m = _model_at(p, c, intensity, bare, n_roots)
    # keep the requested Δ exactly; the recomputed one differs by rounding only
    return replace(m, delta=float(delta))


def resolve_model(p: PhysicalParams) -> DerivedModel:
    """The model the CLI and sweeps operate on.

    Effective-detuning input maps one-to-one. Bare-detuning input picks the
    lowest-intensity stable branch (or the lowest branch if none is stable).
    """
    if p.detuning_kind == "effective":
        return steady_state_from_detuning(p, p.detuning)
    models = _branch_models(p, p.detuning)
    for m in models:
        if stability.analyze(m).stable:
            return m
    return models[0]
