import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nanolase import cli

PULSE = {"kind": "gaussian", "avg_power_W": 13e-6, "fwhm_s": 3.4e-12, "period_s": 13e-9}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_presets_lists_lifetimes(capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "LT" in out and "RT" in out
    assert "188 ps" in out and "50 ps" in out


def test_presets_json(capsys):
    cli.main(["presets", "--json"])
    rows = json.loads(capsys.readouterr().out)
    assert {r["name"] for r in rows} == {"lt-pulsed", "lt-cw", "lt-cw-spot", "rt-pulsed"}


def test_missing_pump_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "llcurve", "preset": "lt-pulsed",
                               "options": {"powers_W": "1e-6:3e-5:40"}}))
    assert cli.main(["run", str(cfg)]) == cli.EXIT_CONFIG
    assert "pump" in capsys.readouterr().err


@pytest.mark.parametrize("config, key", [
    ({"experiment": "simulate", "pump": PULSE, "colour": 1}, "colour"),
    ({"experiment": "simulate", "pump": PULSE, "params": {"tau_nr_G": 5e-11}}, "params.tau_nr_G"),
    ({"experiment": "simulate", "pump": dict(PULSE, power_W=1.0)}, "pump.power_W"),
    ({"experiment": "simulate", "pump": PULSE, "options": {"tol": 1e-8}}, "options.tol"),
])
def test_unknown_keys_rejected(config, key, capsys):
    assert cli.run(config) == cli.EXIT_CONFIG
    assert key in capsys.readouterr().err


def test_invalid_values_are_config_errors(capsys):
    assert cli.run({"experiment": "simulate", "pump": PULSE,
                    "params": {"eta": 2.0}}) == cli.EXIT_CONFIG
    assert cli.run({"experiment": "simulate", "pump": dict(PULSE, fwhm_s=5e-9)}) == cli.EXIT_CONFIG
    assert cli.run({"experiment": "teleport", "pump": PULSE}) == cli.EXIT_CONFIG


def test_parse_grid():
    np.testing.assert_allclose(cli.parse_grid("1e-6:3e-5:40"), np.linspace(1e-6, 3e-5, 40))
    np.testing.assert_allclose(cli.parse_grid("1e-6:1e-4:3:log"), [1e-6, 1e-5, 1e-4])
    for bad in ("1:2", "2:1:5", "0:1:5:log", "a:b:c", "1:2:5:cubic"):
        with pytest.raises(cli.ConfigError):
            cli.parse_grid(bad)


def test_simulate_and_replay_byte_identical(tmp_path):
    out = tmp_path / "a"
    code = cli.main(["simulate", "--preset", "lt-pulsed", "--power", "13e-6", "--fwhm", "3.4e-12",
                     "--set", "tau_relax_s=4e-12", "--t-span=-1e-11:2e-10",
                     "--out", str(out)])
    assert code == 0
    rows = read_csv(out / "simulate.csv")
    assert rows[0] == ["t_s", "N_E_per_m3", "N_G_per_m3", "P_per_m3", "L_out_W"]
    manifest = json.loads((out / "simulate.manifest.json").read_text())
    assert manifest["params"]["tau_relax_s"] == 4e-12
    assert manifest["tool"]["name"] == "nanolase"
    json.loads((out / "simulate.plot.json").read_text())

    assert cli.main(["run", str(out / "simulate.manifest.json"), "--out",
                     str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "simulate.csv").read_bytes() == (out / "simulate.csv").read_bytes()


def test_llcurve_preset_anchor(tmp_path):
    code = cli.main(["llcurve", "--preset", "lt-pulsed", "--powers", "1e-6:3e-5:40",
                     "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "llcurve.csv")
    assert rows[0] == ["pump_W", "light_out_W"] and len(rows) == 41
    plot = json.loads((tmp_path / "llcurve.plot.json").read_text())
    (marker,) = [a for a in plot["annotations"] if a["type"] == "threshold"]
    assert marker["x"] == pytest.approx(6.5e-6, rel=0.1)


def test_threshold_failure_exit_code(tmp_path, capsys):
    code = cli.main(["threshold", "--preset", "lt-cw", "--powers", "1e-9:1e-8:10",
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_NUMERIC
    assert "no-threshold" in capsys.readouterr().err


def test_pulse_response_outputs(tmp_path):
    code = cli.main(["pulse-response", "--preset", "rt-pulsed", "--power", "136e-6",
                     "--fwhm", "3.4e-12", "--irf", "3.2e-12", "--out", str(tmp_path)])
    assert code == 0
    header, values = read_csv(tmp_path / "pulse-response.csv")
    assert header == ["fwhm_s", "rise_time_10_90_s", "fall_time_90_10_s", "peak_delay_s"]
    assert 2.5e-12 < float(values[0]) < 4.5e-12
    assert len(read_csv(tmp_path / "pulse-response.trace.csv")) > 100


def test_fit_eta_cw(tmp_path):
    from nanolase import LT, ll_curve_cw

    p = LT.params("cw", eta=0.03)
    powers = np.geomspace(4e-6, 100e-6, 14)
    ll = ll_curve_cw(p, powers)
    data = tmp_path / "measured.csv"
    ll.scaled(1e9).to_csv(data, light_column="light_arb")
    code = cli.main(["fit-eta", "--preset", "lt-cw", "--measured", str(data),
                     "--bracket", "3e-3:0.3", "--out", str(tmp_path)])
    assert code == 0
    header, values = read_csv(tmp_path / "fit-eta.csv")
    assert float(values[header.index("eta_hat")]) == pytest.approx(0.03, rel=0.01)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nanolase.cli", "presets"],
                          capture_output=True, text=True, check=True)
    assert "rt-pulsed" in proc.stdout
