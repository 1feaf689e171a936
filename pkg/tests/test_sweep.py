import numpy as np
import pytest

from optoent.errors import BracketInvalid, ConfigError
from optoent.sweep import (
    CSV_HEADER,
    PRESETS,
    SweepSpec,
    find_threshold,
    format_cm_csv,
    format_csv,
    params_at,
    parse_csv,
    preset,
    run_sweep,
)


def test_presets_grid_sizes():
    assert len(preset("fig1-5ng").grid) == 200
    assert len(preset("fig2-50ng").grid) == 100
    assert preset("fig2-50ng").base.detuning == pytest.approx(0.5 * preset("fig2-50ng").base.wm)
    with pytest.raises(ConfigError):
        preset("fig3-5ng")


def test_csv_header_and_round_trip():
    spec = SweepSpec(preset("fig1-5ng").base, "detuning_over_wm", tuple(np.linspace(0.5, 1.5, 7)))
    text = format_csv(run_sweep(spec))
    assert text.splitlines()[0] == CSV_HEADER
    rows = parse_csv(text)
    assert len(rows) == 7
    assert all(r["stable"] for r in rows)
    np.testing.assert_allclose([r["delta_over_wm"] for r in rows], np.linspace(0.5, 1.5, 7), rtol=1e-12)


def test_csv_is_deterministic_and_independent_of_jobs():
    spec = SweepSpec(preset("fig2-5ng").base, "temperature_k", tuple(np.geomspace(0.1, 30, 16)))
    a = format_csv(run_sweep(spec, jobs=1))
    b = format_csv(run_sweep(spec, jobs=4))
    assert a == b == format_csv(run_sweep(spec, jobs=1))


def test_unstable_rows_have_empty_entanglement_fields():
    spec = preset("fig1-5ng", kappa_convention="half-linewidth")
    rows = run_sweep(spec)
    unstable = [r for r in rows if not r.stable]
    assert unstable, "the half-linewidth 5 ng sweep crosses the instability"
    parsed = parse_csv(format_csv(rows))
    for row in parsed:
        if not row["stable"]:
            assert row["eta_minus"] is None and row["log_neg"] is None and row["simon"] is None


def test_cm_dump_has_sixteen_columns():
    spec = SweepSpec(preset("fig1-5ng").base, "detuning_over_wm", (0.5, 1.0), dump_cm=True)
    lines = format_cm_csv(run_sweep(spec)).splitlines()
    assert len(lines) == 2
    assert all(len(line.split(",")) == 16 for line in lines)


@pytest.mark.parametrize("axis, value, attr", [
    ("mass_kg", 7e-12, "mass"), ("temperature_k", 3.0, "temperature"),
])
def test_params_at_axes(axis, value, attr):
    p = params_at(preset("fig1-5ng").base, axis, value)
    assert getattr(p, attr) == value
    q = params_at(p, "quality_factor", 1e4)
    assert q.quality_factor == pytest.approx(1e4)


def test_spec_validation():
    base = preset("fig1-5ng").base
    with pytest.raises(ConfigError):
        SweepSpec(base, "colour", (1.0, 2.0))
    with pytest.raises(ConfigError):
        SweepSpec(base, "temperature_k", (1.0, 3.0, 2.0))
    with pytest.raises(ConfigError):
        SweepSpec(base, "temperature_k", ())


def test_threshold_bracket_checks():
    spec = preset("fig2-5ng")
    with pytest.raises(BracketInvalid):
        find_threshold(spec, (100.0, 200.0))  # never entangled
    with pytest.raises(BracketInvalid):
        find_threshold(spec, (0.1, 0.2))  # entangled at both ends
    with pytest.raises(BracketInvalid):
        find_threshold(spec, (1.0, 1.0))


def test_threshold_brackets_sign_change():
    spec = preset("fig2-5ng", gamma_m=preset("fig2-5ng").base.wm / 1e4)
    t = find_threshold(spec, (0.1, 40.0))
    assert 0.1 < t < 40.0
    from optoent.sweep import is_entangled

    assert is_entangled(params_at(spec.base, spec.axis, t * 0.999))
    assert not is_entangled(params_at(spec.base, spec.axis, t))


def test_all_presets_run():
    for name in PRESETS:
        rows = run_sweep(preset(name))
        assert len(rows) == len(preset(name).grid)
