import csv
import json
import math
import subprocess
import sys

import pytest

from nanofiber import __version__
from nanofiber.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_INTERNAL, EXIT_OK, SCHEMAS, main, parse_config, run
from nanofiber.errors import ConfigError

SMALL_SIM = {
    "command": "simulate-pull",
    "initial_radius": "1.5 um",
    "handoff_radius": "1 um",
    "waist_radius": "350 nm",
    "waist_length": "1 mm",
    "hot_zone_width": "50 um",
    "probe_pair": "HE11:TM01",
    "probe_radius_min": "340 nm",
    "probe_radius_max": "1.6 um",
}

CONFIGS = {
    "modes": {"command": "modes", "radius": "390 nm", "wavelength": "795 nm", "n_core": 1.4533},
    "fields": {"command": "fields", "radius": "250 nm", "wavelength": "780 nm", "half_width": "600 nm", "grid_points": 9},
    "neff-curve": {"command": "neff-curve", "wavelength": "780 nm", "samples": 12},
    "coupling-sweep": {"command": "coupling-sweep", "radius_points": 2, "distance_points": 3},
    "pull-plan": {"command": "pull-plan"},
    "radius-extract": {
        "command": "radius-extract",
        "frequency_per_m": 275780.12797113246,
        "wavelength": "795 nm",
        "search_min": "300 nm",
        "search_max": "500 nm",
    },
}


def manifest(path):
    return json.loads((path / "manifest.json").read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_every_command_has_a_schema():
    assert set(SCHEMAS) == {
        "modes",
        "fields",
        "neff-curve",
        "coupling-sweep",
        "trap",
        "pull-plan",
        "simulate-pull",
        "spectrogram",
        "radius-extract",
    }


@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_commands_are_byte_reproducible(name, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(CONFIGS[name], a)[0] == EXIT_OK
    assert run(CONFIGS[name], b)[0] == EXIT_OK
    ma, mb = manifest(a), manifest(b)
    assert ma == mb
    assert ma["version"] == __version__ and ma["command"] == name
    for entry in ma["files"]:
        assert (a / entry["file"]).read_bytes() == (b / entry["file"]).read_bytes()


@pytest.mark.parametrize("name", sorted(CONFIGS) + ["simulate-pull"])
def test_csv_headers_carry_units(name, tmp_path):
    run(CONFIGS.get(name, SMALL_SIM), tmp_path)
    for entry in manifest(tmp_path)["files"]:
        if entry["file"].endswith(".csv"):
            header = read_csv(tmp_path / entry["file"])[0]
            for col in header:
                assert col.endswith("]"), (entry["file"], col)


def test_modes_output(tmp_path):
    status, info = run(CONFIGS["modes"], tmp_path)
    assert status == EXIT_OK
    rows = read_csv(tmp_path / "modes.csv")
    labels = [r[rows[0].index("mode [-]")] for r in rows[1:]]
    assert {"HE11", "TE01", "TM01", "HE21"} <= set(labels)


def test_radius_extract_result(tmp_path):
    status, info = run(CONFIGS["radius-extract"], tmp_path)
    assert status == EXIT_OK
    assert abs(info["radius_m"] - 390e-9) < 1e-12


def test_json_format(tmp_path):
    assert run(CONFIGS["modes"], tmp_path, "json")[0] == EXIT_OK
    assert all(e["file"].endswith(".json") for e in manifest(tmp_path)["files"])


def test_simulate_then_spectrogram(tmp_path):
    sim = tmp_path / "sim"
    assert run(SMALL_SIM, sim)[0] == EXIT_OK
    cfg = {"command": "spectrogram", "input": str(sim / "transmission.csv"), "window_width": "100 um", "hop": "10 um"}
    status, info = run(cfg, tmp_path / "spec")
    assert status == EXIT_OK
    assert info["ridges"] >= 1


@pytest.mark.parametrize(
    "cfg,match",
    [
        ({"command": "modes", "radius": "250 nm", "wavelength": "780 nH"}, "wavelength"),
        ({"command": "modes", "radius": "250 nm", "wavelength": "780 nm", "bogus": 1}, "bogus"),
        ({"command": "modes", "wavelength": "780 nm"}, "radius"),
        ({"command": "launch"}, "command"),
        ({"command": "modes", "radius": "250 nm", "wavelength": "780 nm", "l_max": 1.5}, "l_max"),
        ({"command": "trap", "c3_J_m3": "5e-49"}, "c3_J_m3"),
    ],
)
def test_config_errors_write_nothing(cfg, match, tmp_path):
    out = tmp_path / "out"
    status, info = run(cfg, out)
    assert status == EXIT_CONFIG
    assert match in info["error"]
    assert not out.exists()
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_domain_error_status(tmp_path):
    cfg = {"command": "pull-plan", "hot_zone_width": "50 mm"}
    out = tmp_path / "out"
    status, info = run(cfg, out)
    assert status == EXIT_DOMAIN and "infeasible" in info["error"]
    assert not out.exists()


def test_internal_error_status(tmp_path, monkeypatch):
    import nanofiber.cli as cli

    def boom(p):
        raise ZeroDivisionError("boom")

    monkeypatch.setitem(cli.RUNNERS, "pull-plan", boom)
    assert run({"command": "pull-plan"}, tmp_path / "x")[0] == EXIT_INTERNAL


def test_main_entry_point(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(CONFIGS["pull-plan"]))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert (tmp_path / "o" / "manifest.json").exists()
    cfg.write_text("{not json")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "p")]) == EXIT_CONFIG


def test_module_invocation(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "modes", "radius": "250 nm", "wavelength": "7 80 nm"}))
    proc = subprocess.run([sys.executable, "-m", "nanofiber", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert proc.returncode == EXIT_CONFIG


def test_output_dir_from_config(tmp_path):
    cfg = dict(CONFIGS["pull-plan"], output_dir=str(tmp_path / "here"))
    assert run(cfg)[0] == EXIT_OK
    assert (tmp_path / "here" / "manifest.json").exists()


def test_neff_curve_emits_cutoff_data(tmp_path):
    cfg = {"command": "neff-curve", "wavelength": "780 nm", "samples": 46, "v_min": 0.5, "v_max": 5.0}
    run(cfg, tmp_path)
    rows = read_csv(tmp_path / "neff_curve.csv")
    head = rows[0]
    vcol = next(i for i, h in enumerate(head) if h.startswith("V"))
    mcol = next(i for i, h in enumerate(head) if h.startswith("mode"))
    te = [float(r[vcol]) for r in rows[1:] if r[mcol] == "TE01"]
    assert min(te) > 2.404825557695773 and min(te) - 2.404825557695773 < 0.1
    assert math.isclose(float(rows[1][vcol]), 0.5)


def test_trap_command(tmp_path):
    cfg = {
        "command": "trap",
        "c3_J_m3": 5e-49,
        "blue_power": "12 mW",
        "red_n_core": 1.4496,
        "blue_n_core": 1.4542,
        "n_r": 40,
        "n_phi": 12,
        "n_z": 8,
    }
    status, info = run(cfg, tmp_path)
    assert status == EXIT_OK
    summary = json.loads((tmp_path / "trap_summary.json").read_text())
    assert 200e-9 < summary["distance_from_surface_m"] < 320e-9
    assert summary["depth_uK"] == pytest.approx(info["depth_uK"])
    assert len(summary["trap_frequencies_kHz"]) == 3
    assert len(read_csv(tmp_path / "trap_profile.csv")) == 1 + 40 * 12 * 8
