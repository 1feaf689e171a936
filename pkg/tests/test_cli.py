import json
import subprocess
import sys

import pytest

from optoent import __version__
from optoent.cli import main
from optoent.sweep import CSV_HEADER, parse_csv


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_model_reports_positive_coupling(fig1_config_file, capsys):
    assert main(["model", "--config", str(fig1_config_file)]) == 0
    out = kv(capsys.readouterr().out)
    assert float(out["G_over_2pi_hz"]) > 0
    assert out["branches"] == "1"
    # shortest round-trip float formatting
    assert repr(float(out["kappa_rad_s"])) == out["kappa_rad_s"]


def test_model_zero_power(fig1_config_file, capsys):
    assert main(["model", "--config", str(fig1_config_file), "--power-mw", "0"]) == 0
    assert float(kv(capsys.readouterr().out)["G_rad_s"]) == 0.0


def test_malformed_config_exit_2_with_line(tmp_path, fig1_config_text, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(fig1_config_text.replace("finesse", "finese"))
    assert main(["model", "--config", str(bad)]) == 2
    assert "line 9" in capsys.readouterr().err


def test_missing_source_exit_2(capsys):
    assert main(["model"]) == 2


def test_entangle_default_point(fig1_config_file, capsys):
    assert main(["entangle", "--config", str(fig1_config_file)]) == 0
    out = kv(capsys.readouterr().out)
    assert float(out["log_neg"]) > 0
    assert out["simon_entangled"] == "true"


def test_entangle_unstable_exit_3(fig1_config_file, capsys):
    code = main(["entangle", "--config", str(fig1_config_file), "--kappa-convention", "half-linewidth"])
    assert code == 3
    assert "RH condition 2" in capsys.readouterr().err


def test_entangle_writes_manifest_and_cm(fig1_config_file, tmp_path):
    out, cm = tmp_path / "point.txt", tmp_path / "cm.csv"
    assert main(["entangle", "--config", str(fig1_config_file), "--out", str(out), "--dump-cm", str(cm)]) == 0
    assert len(cm.read_text().strip().split(",")) == 16
    for f in (out, cm):
        man = json.loads((tmp_path / (f.name + ".manifest.json")).read_text())
        assert man["software"]["version"] == __version__
        assert man["parameters_si"]["mass"] == 5e-12
        assert man["derived"]["G"] > 0
        assert man["command_line"][:2] == ["optoent", "entangle"]
        assert "timestamp_utc" in man


def test_sweep_preset_rows(tmp_path):
    out = tmp_path / "fig1.csv"
    assert main(["sweep", "--preset", "fig1-5ng", "--out", str(out), "--jobs", "2"]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == CSV_HEADER
    assert len(parse_csv(text)) == 200
    assert (tmp_path / "fig1.csv.manifest.json").exists()


def test_sweep_custom_axis(fig1_config_file, capsys):
    argv = ["sweep", "--config", str(fig1_config_file), "--axis", "temperature_k",
            "--from", "0.1", "--to", "10", "--points", "5", "--log"]
    assert main(argv) == 0
    rows = parse_csv(capsys.readouterr().out)
    assert [r["temperature_k"] for r in rows] == pytest.approx([0.1, 10**-0.5, 1.0, 10**0.5, 10.0], rel=1e-12)


def test_sweep_needs_axis(fig1_config_file):
    assert main(["sweep", "--config", str(fig1_config_file)]) == 2


def test_threshold_preset_above_20k(capsys):
    assert main(["threshold", "--preset", "fig2-5ng"]) == 0
    assert float(kv(capsys.readouterr().out)["threshold"]) > 20


def test_threshold_bad_bracket_exit_2(capsys):
    assert main(["threshold", "--preset", "fig2-5ng", "--from", "100", "--to", "200"]) == 2


def test_readout_zero_trajectories_is_usage_error(fig1_config_file):
    with pytest.raises(SystemExit) as exc:
        main(["readout", "--config", str(fig1_config_file), "--traj", "0"])
    assert exc.value.code == 2


def test_readout_regime_violation_exit_4(fig1_config_file, capsys):
    code = main(["readout", "--config", str(fig1_config_file), "--kappa2-2pi-hz", "5e6", "--traj", "2"])
    assert code == 4
    assert "w_m >> κ₂" in capsys.readouterr().err


def test_readout_small_run(fig1_config_file, tmp_path):
    out = tmp_path / "ro.csv"
    argv = ["readout", "--config", str(fig1_config_file), "--traj", "2", "--seed", "4", "--out", str(out),
            "--sample-time", "1.6e-5", "--burn-in", "1e-7"]
    assert main(argv) == 0
    header, row = out.read_text().strip().splitlines()
    cols = header.split(",")
    assert len(cols) == 22 and cols[-2:] == ["log_neg", "log_neg_sigma"]
    assert len(row.split(",")) == 22
    man = json.loads((tmp_path / "ro.csv.manifest.json").read_text())
    assert len(man["seeds"]) == 2 and man["trajectory"]["seed"] == 4
    first = out.read_text()
    assert main(argv) == 0
    assert out.read_text() == first


def test_version_and_module_entry():
    res = subprocess.run([sys.executable, "-m", "optoent", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
