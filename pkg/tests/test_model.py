import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optoent.constants import C_LIGHT, HBAR, K_B
from optoent.errors import ConfigError
from optoent.model import (
    DerivedModel,
    _intensity_roots,
    derive_constants,
    kappa_from_finesse,
    resolve_model,
    solve_steady_state,
    thermal_occupation,
)
from optoent.stability import analyze
from optoent.sweep import figure_params


def test_kappa_conventions_differ_by_two():
    full = kappa_from_finesse(1e4, 1e-3, "linewidth")
    half = kappa_from_finesse(1e4, 1e-3, "half-linewidth")
    assert full == pytest.approx(math.pi * C_LIGHT / (1e4 * 1e-3))
    assert full == pytest.approx(2 * half)
    with pytest.raises(ConfigError):
        kappa_from_finesse(1e4, 1e-3, "fwhm-ish")


def test_thermal_occupation_limits():
    wm = 2 * math.pi * 10e6
    assert thermal_occupation(wm, 0.0) == 0.0
    assert thermal_occupation(wm, 1e-9) == 0.0  # exponent beyond the overflow cutoff
    hot = thermal_occupation(wm, 400.0)
    assert hot == pytest.approx(K_B * 400.0 / (HBAR * wm) - 0.5, rel=1e-6)


def test_g_matches_hand_computation(fig1_params, fig1_model):
    p, d = fig1_params, fig1_model
    wc = 2 * math.pi * C_LIGHT / p.wavelength + d.bare_delta
    g0 = wc / p.cavity_length * math.sqrt(HBAR / (p.mass * p.wm))
    kappa = math.pi * C_LIGHT / (p.finesse * p.cavity_length)
    e2 = 2 * p.power * kappa / (HBAR * 2 * math.pi * C_LIGHT / p.wavelength)
    alpha2 = e2 / (kappa**2 + d.delta**2)
    assert d.G0 == pytest.approx(g0, rel=1e-12)
    assert d.G == pytest.approx(g0 * math.sqrt(alpha2) * math.sqrt(2), rel=1e-9)
    assert d.G > 0
    assert d.delta == p.detuning


def test_zero_power_gives_zero_coupling(fig1_params):
    d = resolve_model(fig1_params.replace(power=0.0))
    assert d.G == 0.0
    assert d.alpha_s == 0.0
    assert d.bare_delta == pytest.approx(d.delta)


def test_drift_and_diffusion_layout():
    d = DerivedModel.from_rates(wm=1.0, gamma_m=0.01, kappa=0.5, delta=0.8, G=0.3, nbar=2.0)
    expected = np.array([[0, 1, 0, 0], [-1, -0.01, 0.3, 0], [0, 0, -0.5, 0.8], [0.3, 0, -0.8, -0.5]])
    np.testing.assert_array_equal(d.drift, expected)
    np.testing.assert_array_equal(np.diag(d.diffusion), [0, 0.01 * 5, 0.5, 0.5])
    with pytest.raises(ValueError):
        d.drift[0, 0] = 1.0


@pytest.mark.parametrize("delta_over_wm", [0.2, 1.0, 2.5])
def test_effective_to_bare_round_trip(fig1_params, delta_over_wm):
    p = fig1_params.replace(detuning=delta_over_wm * fig1_params.wm)
    d = resolve_model(p)
    back = resolve_model(p.replace(detuning=d.bare_delta, detuning_kind="bare"))
    assert back.delta == pytest.approx(d.delta, rel=1e-9, abs=1e-6 * p.wm)
    assert back.G == pytest.approx(d.G, rel=1e-9)


def test_steady_state_roots_satisfy_balance(fig1_params, fig1_model):
    p = fig1_params
    for b in solve_steady_state(p, fig1_model.bare_delta):
        c = derive_constants(p, bare_detuning=fig1_model.bare_delta)
        lhs = b.intensity * (c.kappa**2 + b.delta**2)
        assert lhs == pytest.approx(c.E**2, rel=1e-10)


def test_bistable_cubic_has_three_roots():
    # dimensionless: y (1 + (4 - y)^2) = 6 has three positive roots
    roots = _intensity_roots(math.sqrt(6.0), 1.0, 1.0, 1.0, 4.0)
    assert len(roots) == 3
    for y in roots:
        assert y * (1 + (4 - y) ** 2) == pytest.approx(6.0, rel=1e-12)


def test_bistable_middle_branch_unstable():
    d0, e = 4.0, math.sqrt(6.0)
    roots = _intensity_roots(e, 1.0, 1.0, 1.0, d0)
    verdicts = []
    for x in roots:
        m = DerivedModel.from_rates(wm=1.0, gamma_m=1e-3, kappa=1.0, delta=d0 - x, G=math.sqrt(2 * x))
        verdicts.append(analyze(m).stable)
    assert verdicts[1] is False


def test_bare_input_picks_stable_branch():
    p = figure_params(5e-12, 1.07e4)
    kappa = kappa_from_finesse(p.finesse, p.cavity_length)
    d = resolve_model(p.replace(detuning=2 * kappa, detuning_kind="bare"))
    assert analyze(d).stable


@pytest.mark.parametrize(
    "change",
    [{"mass": -1.0}, {"cavity_length": 0.0}, {"temperature": -0.1}, {"power": float("nan")},
     {"gamma_m": 2 * math.pi * 10e6 / 5}, {"detuning_kind": "sideways"}, {"kappa_convention": "x"}],
)
def test_invalid_params_rejected(change):
    with pytest.raises(ConfigError):
        figure_params(5e-12, 1.07e4, **change)


@settings(max_examples=50, deadline=None)
@given(delta=st.floats(0.05, 3.0), temp=st.floats(0.0, 50.0))
def test_coupling_independent_of_temperature(delta, temp):
    p = figure_params(5e-12, 1.07e4, delta)
    a = resolve_model(p)
    b = resolve_model(p.replace(temperature=temp))
    assert a.G == b.G and a.delta == b.delta
    assert b.nbar >= 0


def test_half_linewidth_kappa_value():
    p = figure_params(5e-12, 1.07e4, kappa_convention="half-linewidth")
    assert derive_constants(p).kappa == pytest.approx(4.401e7, rel=1e-3)
