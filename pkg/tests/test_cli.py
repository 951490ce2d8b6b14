import csv
import json

import numpy as np
import pytest

from regfred import families
from regfred.cli import CSV_COLUMNS, describe, main
from regfred.config import ConfigError, parse_config, parse_family_spec


def small_config(tmp_path, **overrides):
    cfg = {
        "suite": "all",
        "seed": 5,
        "levels": [8, 16, 32],
        "cases": 4,
        "gap_samples": 2,
        "families": [
            {"name": "diag_k", "kind": "diagonal", "params": {"profile": "k"},
             "expect": {"fredholm": True, "index": 0}},
            {"name": "shift", "kind": "shift", "expect": {"fredholm": True, "index": -1}},
        ],
        "output": {"dir": str(tmp_path / "out"), "format": ["csv", "json"]},
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def body(path):
    return "".join(path.read_text().splitlines(keepends=True)[1:])


def test_verify_identities_passes(tmp_path, capsys):
    cfg = small_config(tmp_path)
    assert main(["verify", "--config", str(cfg), "--suite", "identities"]) == 0
    out = tmp_path / "out"
    lines = (out / "identities.csv").read_text().splitlines()
    assert lines[0].startswith("# regfred")
    rows = list(csv.DictReader(lines[1:]))
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert all(r["pass"] == "pass" and r["seconds"] == "" for r in rows)
    summary = json.loads((out / "identities.json").read_text())
    assert summary["failures"] == [] and summary["passed"] == summary["cases"]
    assert "identities:" in capsys.readouterr().out


def test_verify_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    main(["verify", "--config", str(cfg), "--suite", "gap", "--out", str(tmp_path / "a")])
    main(["verify", "--config", str(cfg), "--suite", "gap", "--out", str(tmp_path / "b")])
    assert body(tmp_path / "a" / "gap.csv") == body(tmp_path / "b" / "gap.csv")


def test_seed_override_changes_report(tmp_path):
    cfg = small_config(tmp_path)
    main(["verify", "--config", str(cfg), "--suite", "identities", "--out", str(tmp_path / "a")])
    main(["verify", "--config", str(cfg), "--suite", "identities", "--seed", "6", "--out", str(tmp_path / "b")])
    assert body(tmp_path / "a" / "identities.csv") != body(tmp_path / "b" / "identities.csv")


def test_timings_column(tmp_path):
    cfg = small_config(tmp_path)
    main(["verify", "--config", str(cfg), "--suite", "identities", "--timings"])
    rows = list(csv.DictReader((tmp_path / "out" / "identities.csv").read_text().splitlines()[1:]))
    assert all(float(r["seconds"]) >= 0 for r in rows)


def test_wrong_expectation_exits_one(tmp_path, capsys):
    cfg = small_config(tmp_path, levels=[32, 64, 128, 256], families=[
        {"name": "bad", "kind": "diagonal", "params": {"profile": "inv_k"}, "expect": {"fredholm": True}}])
    assert main(["verify", "--config", str(cfg), "--suite", "fredholm"]) == 1
    assert "FAIL fredholm detect/bad" in capsys.readouterr().err


@pytest.mark.parametrize("change", [
    {"seed": None},
    {"levels": [8, 16]},
    {"levels": [16, 8, 32]},
    {"suite": "everything"},
    {"families": [{"name": "x", "kind": "nope"}]},
    {"tolerances": {"delta_low": 1e-2, "delta_high": 1e-6}},
])
def test_config_errors_exit_two(tmp_path, change, capsys):
    cfg = small_config(tmp_path, **change)
    if change.get("seed", 0) is None:
        data = json.loads(cfg.read_text())
        del data["seed"]
        cfg.write_text(json.dumps(data))
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--config", str(bad)]) == 2


def test_parse_family_spec_forms():
    assert parse_family_spec("diagonal(k)").params == {"profile": "k"}
    spec = parse_family_spec("diagonal:profile=k,shift=10")
    assert spec.params == {"profile": "k", "shift": "10"}
    assert parse_family_spec('{"kind": "shift"}').kind == "shift"
    with pytest.raises(ConfigError):
        parse_family_spec("wobble")
    with pytest.raises(ConfigError):
        parse_family_spec("shift(3)")


def test_custom_matrix_file_family(tmp_path):
    for n in (8, 16, 32):
        families.write_matrix(tmp_path / f"m{n}.txt", np.eye(n, k=-1))
    cfg = small_config(tmp_path, families=[{
        "name": "file_shift", "kind": "custom-matrix-file",
        "params": {"paths": ["m8.txt", "m16.txt", "m32.txt"]},
        "expect": {"fredholm": True, "index": -1}}])
    parsed = parse_config(json.loads(cfg.read_text()), base_dir=tmp_path)
    assert parsed.families[0].build(parsed.levels).levels == (8, 16, 32)
    assert main(["verify", "--config", str(cfg), "--suite", "fredholm"]) == 0


def test_describe(capsys):
    text = describe("shift", (8, 16, 32))
    assert "index -1" in text and "levels: 8, 16, 32" in text
    assert main(["describe", "--family", "diagonal(k)", "--levels", "8", "16", "32"]) == 0
    out = capsys.readouterr().out
    assert "cayley-criterion" in out
    assert main(["describe", "--family", "bogus"]) == 2
