import json

import numpy as np
import pytest

from kerrjpa import __version__, cli
from kerrjpa.io import read_csv, sha256_file

BASE = """\
schema_version = 1
[gain_map]
n_f = 5
n_p = 4
n_theta = 16
[contour]
n_f = 3
[squeeze]
n_samples = 5000
n_theta = 8
histogram_bins = 4
histogram_samples = 2000
[synth_noise]
n_vts = 60
"""


@pytest.fixture
def cfg(tmp_path):
    def make(extra=""):
        path = tmp_path / "cfg.toml"
        path.write_text(BASE + extra)
        return path

    return make


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_gain_map_artifacts_and_manifest(cfg, tmp_path):
    out = tmp_path / "o"
    assert run("gain-map", "--config", cfg(), "--out", out) == cli.EXIT_OK
    raw = (out / "gainmap.csv").read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0].startswith("# config_hash=")
    meta, cols = read_csv(out / "gainmap.csv")
    assert list(cols) == ["f_p_Hz", "f_ratio", "P_p_W", "p_ratio_db", "gain_db", "bistable"]
    assert cols["gain_db"].size == 20
    payload = json.loads((out / "gainmap.json").read_text())
    assert payload["config_hash"] == meta["config_hash"]
    assert np.array(payload["gain_db"], dtype=float).shape == (5, 4)

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "gain-map" and manifest["tool_version"] == __version__
    assert manifest["config_hash"] == meta["config_hash"]
    for name, digest in manifest["outputs"].items():
        assert sha256_file(out / name) == digest


def test_single_cell_grid(cfg, tmp_path):
    path = tmp_path / "one.toml"
    path.write_text("schema_version = 1\n[gain_map]\nn_f = 1\nn_p = 1\nf_ratio_range = [1.002, 1.002]\n"
                    "p_db_range = [-1.0, -1.0]\nn_theta = 16\n")
    assert run("gain-map", "--config", path, "--out", tmp_path / "o", "--format", "csv") == 0
    _, cols = read_csv(tmp_path / "o" / "gainmap.csv")
    assert cols["gain_db"].size == 1 and np.isfinite(cols["gain_db"][0])
    assert not (tmp_path / "o" / "gainmap.json").exists()


def test_zero_probe_distort(cfg, tmp_path):
    path = cfg("[distort]\nprobe_photons = 0.0\ngains_db = [8.0]\nn_theta = 16\n")
    assert run("distort", "--config", path, "--out", tmp_path / "o") == 0
    _, sweeps = read_csv(tmp_path / "o" / "sweeps.csv")
    assert np.all(sweeps["I"] == 0) and np.all(sweeps["Q"] == 0)
    payload = json.loads((tmp_path / "o" / "distort.json").read_text())
    # NaN metrics are written as JSON null
    assert "NaN" not in (tmp_path / "o" / "distort.json").read_text()
    assert payload is not None


def test_squeeze_sq_off_is_zero(cfg, tmp_path):
    path = cfg("[squeeze.amp]\ngain_db = 25.0\n").read_text().replace("[squeeze]\n", "[squeeze]\nsq_on = false\n")
    p = tmp_path / "off.toml"
    p.write_text(path)
    assert run("squeeze", "--config", p, "--out", tmp_path / "o", "--seed", "4") == 0
    _, cols = read_csv(tmp_path / "o" / "squeeze.csv")
    assert np.all(np.abs(cols["S_db"]) <= 3 * cols["stderr_db"] + 1e-12)
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["seeds"] == {"squeeze": 4}


def test_synth_then_fit_recovers_parameters(cfg, tmp_path):
    path = cfg("[noise_fit]\nfreq_Hz = 7.0e9\n")
    assert run("synth-noise", "--config", path, "--out", tmp_path / "d", "--seed", "11") == 0
    data = tmp_path / "d" / "noise_data.csv"
    assert run("noise-fit", "--config", path, "--out", tmp_path / "f", "--data", data) == 0
    fit = json.loads((tmp_path / "f" / "noise_fit.json").read_text())
    assert fit["params"]["n_add"] == pytest.approx(0.045, abs=0.003)
    assert fit["params"]["lambda"] == pytest.approx(0.79, abs=0.02)
    assert fit["data_sha256"] == sha256_file(data)
    assert fit["covariance"]["order"] == ["chain_gain_db", "lambda", "n_add"]


def test_noise_fit_in_watts(cfg, tmp_path):
    path = cfg("[synth_noise.x]\n").read_text().replace("[synth_noise.x]\n", "")
    p = tmp_path / "w.toml"
    p.write_text(path.replace("n_vts = 60", "n_vts = 60\nunits = \"W\"\nnoise_frac = 0.0"))
    assert run("synth-noise", "--config", p, "--out", tmp_path / "d") == 0
    assert run("noise-fit", "--config", p, "--out", tmp_path / "f", "--data", tmp_path / "d" / "noise_data.csv") == 0
    fit = json.loads((tmp_path / "f" / "noise_fit.json").read_text())
    assert fit["params"]["n_add"] == pytest.approx(0.045, rel=1e-6)


def test_line_budget(cfg, tmp_path):
    path = cfg("[line_budget]\ninput_attenuation_db = -70.0\n")
    assert run("line-budget", "--config", path, "--out", tmp_path / "o", "--format", "csv") == 0
    lb = json.loads((tmp_path / "o" / "line_budget.json").read_text())
    assert lb["eta_db"] == 1.2
    assert lb["P_c"]["device_plane_dBm"] == pytest.approx(-88.32, abs=0.01)
    assert lb["P_c"]["generator_plane_dBm"] == pytest.approx(lb["P_c"]["device_plane_dBm"] + 70.0)


def test_env_var_config(cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("KERRJPA_CONFIG", str(cfg("[lmg]\nn_f = 2\nn_theta = 16\n")))
    assert run("lmg", "--out", tmp_path / "o") == 0
    _, cols = read_csv(tmp_path / "o" / "lmg.csv")
    assert cols["gain_db"].size == 2


def test_output_dir_does_not_change_hash(cfg, tmp_path):
    path = cfg()
    assert run("line-budget", "--config", path, "--out", tmp_path / "a") == 0
    assert run("line-budget", "--config", path, "--out", tmp_path / "b") == 0
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert a["config_hash"] == b["config_hash"] and a["outputs"] == b["outputs"]


def test_unknown_key_exit_code(cfg, tmp_path, capsys):
    assert run("lmg", "--config", cfg("[lmg]\nnf = 3\n"), "--out", tmp_path / "o") == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "lmg.nf" in err and "cfg.toml:" in err


def test_target_above_lmg_is_input_error(cfg, tmp_path):
    path = cfg("[contour]\ntarget_gain_db = 80.0\nn_f = 2\nn_theta = 16\n".replace("[contour]\n", "[contour]\n", 1))
    text = path.read_text().replace("[contour]\nn_f = 3\n", "")
    path.write_text(text)
    assert run("contour", "--config", path, "--out", tmp_path / "o") == cli.EXIT_CONFIG


def test_malformed_data_exit_code(cfg, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("T_vts_K,T_fridge_K,psd_out_quanta\n0.1,0.05,x\n")
    assert run("noise-fit", "--config", cfg(), "--out", tmp_path / "o", "--data", bad) == cli.EXIT_CONFIG
    assert f"{bad}:2:" in capsys.readouterr().err
    assert run("noise-fit", "--config", cfg(), "--out", tmp_path / "o") == cli.EXIT_CONFIG


def test_numerical_error_exit_code(cfg, tmp_path):
    path = cfg("[noise_fit]\nmax_nfev = 1\n")
    assert run("synth-noise", "--config", path, "--out", tmp_path / "d") == 0
    code = run("noise-fit", "--config", path, "--out", tmp_path / "o", "--data", tmp_path / "d" / "noise_data.csv")
    assert code == cli.EXIT_NUMERICAL


def test_io_error_exit_code(cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("line-budget", "--config", cfg(), "--out", blocker / "sub") == cli.EXIT_IO
    assert run("line-budget", "--config", tmp_path / "missing.toml", "--out", tmp_path / "o") == cli.EXIT_IO


def test_bad_flags(cfg, tmp_path):
    assert run("lmg", "--config", cfg(), "--threads", "0") == cli.EXIT_CONFIG
    assert run("lmg", "--config", cfg(), "--seed", "-1") == cli.EXIT_CONFIG
