import json
import math

import pytest

from qgem.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from qgem.config import ConfigError, ExperimentConfig
from qgem.io import RunManifest, TIMESTAMP_PREFIX, load_config_file, load_manifest, parse_quantity, read_csv


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith(TIMESTAMP_PREFIX)]


@pytest.mark.parametrize(
    "text,key,value",
    [
        ("250um", "superposition_width", 250e-6),
        ("0.2mm", "min_distance", 2e-4),
        ("2.5s", "hold_time", 2.5),
        ("50mHz", "decoherence_rate", 0.05),
        ("1e-11g", "mass_1", 1e-14),
        ("90deg", "theta_1", math.pi / 2),
        ("0.1", "decoherence_rate", 0.1),
    ],
)
def test_unit_suffixes(text, key, value):
    assert parse_quantity(text, key) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("text,key", [("3s", "superposition_width"), ("1Hz", "hold_time"), ("abc", "hold_time")])
def test_unit_violations_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_quantity(text, key)
    assert exc.value.key == key


def test_config_file_rejections(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"superposition_width": -1}))
    with pytest.raises(ConfigError) as exc:
        load_config_file(bad)
    assert exc.value.key == "superposition_width"
    bad.write_text(json.dumps({"colour": 1}))
    with pytest.raises(ConfigError) as exc:
        load_config_file(bad)
    assert exc.value.key == "colour"


def test_entropy_output(tmp_path):
    assert main(["entropy", "--setup", "parallel", "--dimension", "2", "--out", str(tmp_path)]) == EXIT_OK
    cols, rows = read_csv(tmp_path / "entropy.csv")
    assert cols == ["tau_s", "D", "entropy_bits"]
    assert rows == [["2.5", "2", rows[0][2]]]
    assert float(rows[0][2]) == pytest.approx(0.152, abs=0.001)
    manifest = load_manifest(tmp_path / "entropy_manifest.json")
    assert manifest.resolved_config() == ExperimentConfig.parallel()
    assert str(tmp_path / "entropy.csv") in manifest.outputs


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"hold_time": 1.0, "dimension": 3}))
    assert main(["entropy", "--config", str(cfg), "--tau", "2s", "--out", str(tmp_path)]) == EXIT_OK
    m = load_manifest(tmp_path / "entropy_manifest.json")
    assert m.config["hold_time"] == 2.0 and m.config["dimension"] == 3


def test_manifest_round_trip(tmp_path):
    c = ExperimentConfig(dimension=4, decoherence_rate=0.075, hold_time=1.75)
    m = RunManifest("witness", c.to_dict())
    (tmp_path / "m.json").write_text(json.dumps(m.to_dict()))
    assert load_manifest(tmp_path / "m.json").resolved_config() == c
    # a manifest is also accepted as --config
    assert ExperimentConfig.from_dict(load_config_file(tmp_path / "m.json")) == c


def test_custom_angles(tmp_path, capsys):
    assert main(["witness", "--setup", "custom", "--theta1", "1.0", "--theta2", "4.0", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "theta_1" in capsys.readouterr().err
    ok = ["witness", "--setup", "custom", "--theta1", "5.0", "--theta2", "1.2", "--dimension", "2", "--out", str(tmp_path)]
    assert main(ok) == EXIT_OK
    assert main(["witness", "--setup", "parallel", "--theta1", "1.0", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["witness", "--setup", "custom", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"superposition_width": -1}))
    assert main(["entropy", "--config", str(bad)]) == EXIT_CONFIG
    assert "superposition_width" in capsys.readouterr().err


def test_simulate_requires_seed(tmp_path):
    assert main(["simulate", "--shots", "1000", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["entropy", "--out", str(blocker / "sub")]) == EXIT_IO


def test_simulate_replay_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--grid", "100", "2000", "4", "--reps", "10", "--seed", "11", "--grouped"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    cols, rows = read_csv(a / "confidence.csv")
    assert cols == ["M", "mean_confidence", "std_confidence", "W_mean", "s_W_mean", "mode", "D", "gamma", "tau", "seed"]
    assert {r[5] for r in rows} == {"grouped"}
    assert main(["replay", str(a / "simulate_manifest.json"), "--out", str(b)]) == EXIT_OK
    assert body(a / "confidence.csv") == body(b / "confidence.csv")


def test_decompose_and_group_documents(tmp_path):
    assert main(["decompose", "--dimension", "3", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "witness_terms.json").read_text())
    assert doc["term_count"] == 77 == len(doc["terms"])
    assert set(doc["terms"][0]) == {"i", "j", "c_ij"}
    assert main(["group", "--dimension", "2", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "witness_terms.json").read_text())
    assert doc["group_count"] == 1 and len(doc["groups"][0]["members"]) == 3


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("QGEM_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["decompose"]) == EXIT_OK
    assert (tmp_path / "env" / "witness_terms.json").exists()


@pytest.mark.parametrize(
    "args,name",
    [
        (["deco-sweep", "--dimensions", "2", "--grid", "0", "0.1", "3"], "decoherence.csv"),
        (["heatmap", "--points", "8"], "heatmap.csv"),
        (["width-sweep", "--dimensions", "2", "--grid", "50um", "500um", "4"], "width.csv"),
        (["width-sweep", "--scaled", "--dimensions", "2,3", "--grid", "1s", "2.5s", "2"], "width.csv"),
        (["tradeoff", "--grid", "0", "0.2", "5"], "tradeoff.csv"),
    ],
)
def test_sweep_subcommands_write_tables(tmp_path, args, name):
    assert main(args + ["--out", str(tmp_path)]) == EXIT_OK
    cols, rows = read_csv(tmp_path / name)
    assert rows and all(len(r) == len(cols) for r in rows)


def test_heatmap_writes_nan_for_forbidden_cells(tmp_path):
    assert main(["heatmap", "--points", "4", "--out", str(tmp_path)]) == EXIT_OK
    cols, rows = read_csv(tmp_path / "heatmap.csv")
    masked = [r for r in rows if r[3] == "0"]
    assert masked and all(r[2] == "nan" for r in masked)
