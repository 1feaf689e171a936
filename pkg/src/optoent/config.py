"""``key = value`` parameter files.

Example::

    # 5 ng mirror
    cavity_length_m = 1e-3
    wavelength_m = 810e-9
    power_w = 0.05
    mech_freq_2pi_hz = 10e6
    mech_damping_2pi_hz = 100
    mass_kg = 5e-12
    temperature_k = 0.4
    finesse = 1.07e4
    detuning_over_wm = 1.0

``quality_factor`` may replace ``mech_damping_2pi_hz`` and
``bare_detuning_2pi_hz`` may replace ``detuning_over_wm``.
"""

from __future__ import annotations

import math
from pathlib import Path

from .constants import DEFAULT_KAPPA_CONVENTION
from .errors import ConfigError
from .model import PhysicalParams

REQUIRED = ("cavity_length_m", "wavelength_m", "power_w", "mech_freq_2pi_hz", "mass_kg",
            "temperature_k", "finesse")
ALTERNATIVES = (("mech_damping_2pi_hz", "quality_factor"), ("detuning_over_wm", "bare_detuning_2pi_hz"))
KNOWN = set(REQUIRED) | {k for pair in ALTERNATIVES for k in pair}


def parse_config(text: str, kappa_convention: str = DEFAULT_KAPPA_CONVENTION) -> PhysicalParams:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in KNOWN:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: value for {key!r} is not a number: {val!r}") from None
        if not math.isfinite(values[key]):
            raise ConfigError(f"line {lineno}: value for {key!r} is not finite")

    missing = [k for k in REQUIRED if k not in values]
    for a, b in ALTERNATIVES:
        if a in values and b in values:
            raise ConfigError(f"give either {a} or {b}, not both")
        if a not in values and b not in values:
            missing.append(f"{a} (or {b})")
    if missing:
        raise ConfigError("missing keys: " + ", ".join(missing))

    wm = 2 * math.pi * values["mech_freq_2pi_hz"]
    if "mech_damping_2pi_hz" in values:
        gamma = 2 * math.pi * values["mech_damping_2pi_hz"]
    else:
        q = values["quality_factor"]
        if not q > 0:
            raise ConfigError("quality_factor must be > 0")
        gamma = wm / q
    if "detuning_over_wm" in values:
        detuning, kind = values["detuning_over_wm"] * wm, "effective"
    else:
        detuning, kind = 2 * math.pi * values["bare_detuning_2pi_hz"], "bare"

    return PhysicalParams(
        cavity_length=values["cavity_length_m"],
        wavelength=values["wavelength_m"],
        power=values["power_w"],
        wm=wm,
        gamma_m=gamma,
        mass=values["mass_kg"],
        temperature=values["temperature_k"],
        finesse=values["finesse"],
        detuning=detuning,
        detuning_kind=kind,
        kappa_convention=kappa_convention,
    )


def load_config(path, kappa_convention: str = DEFAULT_KAPPA_CONVENTION) -> PhysicalParams:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, kappa_convention=kappa_convention)


def format_config(p: PhysicalParams) -> str:
    lines = [
        f"cavity_length_m = {p.cavity_length!r}",
        f"wavelength_m = {p.wavelength!r}",
        f"power_w = {p.power!r}",
        f"mech_freq_2pi_hz = {p.wm / (2 * math.pi)!r}",
        f"mech_damping_2pi_hz = {p.gamma_m / (2 * math.pi)!r}",
        f"mass_kg = {p.mass!r}",
        f"temperature_k = {p.temperature!r}",
        f"finesse = {p.finesse!r}",
    ]
    if p.detuning_kind == "effective":
        lines.append(f"detuning_over_wm = {p.detuning / p.wm!r}")
    else:
        lines.append(f"bare_detuning_2pi_hz = {p.detuning / (2 * math.pi)!r}")
    return "\n".join(lines) + "\n"
