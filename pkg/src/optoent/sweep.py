"""One-dimensional parameter sweeps, CSV output and entanglement thresholds."""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import EN_FLOOR
from .entanglement import EntanglementReport, entanglement_report
from .errors import BracketInvalid, ConfigError, UnstableSystem
from .lyapunov import CovarianceMatrix, solve_lyapunov
from .model import DerivedModel, PhysicalParams, resolve_model
from .stability import StabilityReport, analyze

AXES = ("detuning_over_wm", "temperature_k", "mass_kg", "quality_factor")

CSV_HEADER = (
    "axis,delta_over_wm,temperature_k,mass_kg,finesse,kappa_rad_s,G_rad_s,nbar,"
    "stable,eta_minus,log_neg,simon,branches"
)

TWO_PI = 2 * math.pi


def figure_params(mass_kg: float, finesse: float, delta_over_wm: float = 1.0, **changes) -> PhysicalParams:
    """Laser, cavity and mirror parameters shared by both figures (L = 1 mm, 810 nm, 50 mW,
    w_m/2π = 10 MHz, γ_m/2π = 100 Hz, T = 400 mK)."""
    wm = TWO_PI * 10e6
    p = PhysicalParams(
        cavity_length=1e-3,
        wavelength=810e-9,
        power=50e-3,
        wm=wm,
        gamma_m=TWO_PI * 100.0,
        mass=mass_kg,
        temperature=0.4,
        finesse=finesse,
        detuning=delta_over_wm * wm,
        detuning_kind="effective",
    )
    return p.replace(**changes) if changes else p


MIRRORS = {"5ng": (5e-12, 1.07e4, 1.0), "50ng": (50e-12, 3.4e4, 0.5)}


@dataclass(frozen=True)
class SweepSpec:
    base: PhysicalParams
    axis: str
    grid: tuple
    dump_cm: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; choose from {AXES}")
        g = tuple(float(x) for x in self.grid)
        if not g:
            raise ConfigError("sweep grid is empty")
        diffs = np.diff(g)
        if len(g) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("sweep grid must be strictly monotone")
        object.__setattr__(self, "grid", g)


def preset(name: str, **param_changes) -> SweepSpec:
    """Named sweeps: ``fig1-5ng``, ``fig1-50ng`` (E_N vs Δ/w_m) and ``fig2-5ng``,
    ``fig2-50ng`` (E_N vs T; Δ = w_m for 5 ng, w_m/2 for 50 ng)."""
    try:
        fig, mirror = name.split("-", 1)
        mass, finesse, fig2_detuning = MIRRORS[mirror]
    except (ValueError, KeyError):
        raise ConfigError(f"unknown preset {name!r}") from None
    if fig == "fig1":
        base = figure_params(mass, finesse, 1.0, **param_changes)
        return SweepSpec(base, "detuning_over_wm", tuple(np.linspace(0.1, 3.0, 200)))
    if fig == "fig2":
        base = figure_params(mass, finesse, fig2_detuning, **param_changes)
        return SweepSpec(base, "temperature_k", tuple(np.geomspace(0.1, 40.0, 100)))
    raise ConfigError(f"unknown preset {name!r}")


PRESETS = ("fig1-5ng", "fig1-50ng", "fig2-5ng", "fig2-50ng")


def params_at(base: PhysicalParams, axis: str, x: float) -> PhysicalParams:
    if axis == "detuning_over_wm":
        return base.replace(detuning=x * base.wm, detuning_kind="effective")
    if axis == "temperature_k":
        return base.replace(temperature=x)
    if axis == "mass_kg":
        return base.replace(mass=x)
    if axis == "quality_factor":
        return base.replace(gamma_m=base.wm / x)
    raise ConfigError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True)
class PointResult:
    model: DerivedModel
    stability: StabilityReport
    cm: Optional[CovarianceMatrix]
    entanglement: Optional[EntanglementReport]

    @property
    def stable(self) -> bool:
        return self.cm is not None


def evaluate_point(p: PhysicalParams) -> PointResult:
    """Full pipeline at one parameter point; unstable points carry no CM."""
    d = resolve_model(p)
    st = analyze(d)
    if not st.stable:
        return PointResult(d, st, None, None)
    try:
        v = solve_lyapunov(d.drift, d.diffusion, margin=d.stability_margin)
    except UnstableSystem:
        return PointResult(d, st, None, None)
    return PointResult(d, st, v, entanglement_report(v))


@dataclass(frozen=True)
class SweepRow:
    axis: float
    delta_over_wm: float
    temperature_k: float
    mass_kg: float
    finesse: float
    kappa: float
    G: float
    nbar: float
    stable: bool
    eta_minus: Optional[float]
    log_neg: Optional[float]
    simon: Optional[bool]
    branches: int
    cm: Optional[tuple] = None


def _row(spec: SweepSpec, x: float) -> SweepRow:
    p = params_at(spec.base, spec.axis, x)
    r = evaluate_point(p)
    d, ent = r.model, r.entanglement
    return SweepRow(
        axis=x,
        delta_over_wm=d.delta / d.wm,
        temperature_k=p.temperature,
        mass_kg=p.mass,
        finesse=p.finesse,
        kappa=d.kappa,
        G=d.G,
        nbar=d.nbar,
        stable=r.stable,
        eta_minus=ent.eta_minus if ent else None,
        log_neg=ent.log_neg if ent else None,
        simon=ent.simon_entangled if ent else None,
        branches=d.branch_count,
        cm=tuple(r.cm.row_major()) if (r.cm is not None and spec.dump_cm) else None,
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda x: _row(spec, x), spec.grid))
    return [_row(spec, x) for x in spec.grid]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def format_csv(rows: Sequence[SweepRow]) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in rows:
        fields = (r.axis, r.delta_over_wm, r.temperature_k, r.mass_kg, r.finesse, r.kappa, r.G, r.nbar,
                  r.stable, r.eta_minus, r.log_neg, r.simon, r.branches)
        out.write(",".join(_fmt(f) for f in fields) + "\n")
    return out.getvalue()


def format_cm_csv(rows: Sequence[SweepRow]) -> str:
    """One row per grid point, 16 row-major CM entries; empty fields where unstable."""
    lines = []
    for r in rows:
        vals = r.cm if r.cm is not None else (None,) * 16
        lines.append(",".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[dict]:
    """Read a sweep CSV back into dicts of typed values (None for empty fields)."""
    lines = text.strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a sweep CSV (header mismatch)")
    keys = CSV_HEADER.split(",")
    out = []
    for line in lines[1:]:
        row = {}
        for k, v in zip(keys, line.split(",")):
            if v == "":
                row[k] = None
            elif v in ("true", "false"):
                row[k] = v == "true"
            elif k == "branches":
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out


def is_entangled(p: PhysicalParams) -> bool:
    r = evaluate_point(p)
    return r.entanglement is not None and r.entanglement.log_neg >= EN_FLOOR


def bisect_boundary(pred, lo: float, hi: float, tol: float) -> float:
    """Boundary between pred(lo) true and pred(hi) false, to absolute ``tol``; returns the false side."""
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return hi


def find_threshold(spec: SweepSpec, bracket: tuple[float, float]) -> float:
    """Axis value where entanglement (E_N >= 1e-6) is lost, located by bisection.

    Requires E_N > 0 at ``bracket[0]`` and E_N = 0 (or instability) at ``bracket[1]``.
    Absolute tolerance is |hi − lo|·1e-4.
    """
    lo, hi = (float(b) for b in bracket)
    if lo == hi:
        raise BracketInvalid("bracket endpoints coincide")

    def pred(x):
        return is_entangled(params_at(spec.base, spec.axis, x))

    if not pred(lo):
        raise BracketInvalid(f"no entanglement at bracket start {spec.axis} = {lo:g}")
    if pred(hi):
        raise BracketInvalid(f"still entangled at bracket end {spec.axis} = {hi:g}")
    return bisect_boundary(pred, lo, hi, abs(hi - lo) * 1e-4)
