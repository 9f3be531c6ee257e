import configparser
import json

import numpy as np
import pytest

from partialchan.cli import main
from partialchan.envmap import EnvironmentMap, load_region, save_map


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_trace_on_free_map(tmp_path, capsys):
    save_map(EnvironmentMap(np.zeros((50, 50), np.uint8), 0.15), tmp_path / "m.json")
    before = (tmp_path / "m.json").read_bytes()
    code, out, _ = _run(capsys, "trace", "--map", tmp_path / "m.json", "--tx", "1,1", "--rx", "5,5",
                        "--out", tmp_path / "o")
    assert code == 0
    ps = json.loads(out)
    assert [p["order"] for p in ps["paths"]] == [0]
    assert ps["paths"][0]["route"] == [[1.0, 1.0], [5.0, 5.0]]
    assert json.loads((tmp_path / "o" / "pathset.json").read_text()) == ps
    assert (tmp_path / "m.json").read_bytes() == before


def test_resolved_config_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[tracer]\nmax_reflection_order = 1\n\n[dataset]\nlinks_per_map = 7\n")
    code, _, _ = _run(capsys, "genmaps", "--n", 2, "--config", cfg, "--max-order", 0, "--out", tmp_path / "o")
    assert code == 0
    cp = configparser.ConfigParser()
    cp.read(tmp_path / "o" / "resolved_config.ini")
    assert cp["tracer"]["max_reflection_order"] == "0"  # flag beats file
    assert cp["dataset"]["links_per_map"] == "7"
    assert cp["tracer"]["frequency_ghz"] == "28.0"  # defaults expanded
    assert sorted(p.name for p in (tmp_path / "o" / "maps").iterdir()) == ["map000.json", "map001.json"]


def test_pipeline_subcommands(tmp_path, capsys):
    o = tmp_path / "o"
    assert _run(capsys, "genmaps", "--n", 3, "--out", o)[0] == 0
    code, out, _ = _run(capsys, "explore", "--map", o / "maps" / "map000.json", "--schedule", "steps",
                        "--steps", "0,10,20", "--out", o)
    assert code == 0 and len(out.splitlines()) == 3
    assert load_region(o / "snapshots" / "map000_step10.json").step_index == 10
    assert _run(capsys, "dataset", "--maps", o / "maps", "--links-per-map", 25, "--n-test-maps", 1,
                "--out", o)[0] == 0
    assert _run(capsys, "train", "--dataset", o / "dataset.csv", "--epochs", 20, "--out", o)[0] == 0
    code, out, _ = _run(capsys, "eval", "--dataset", o / "dataset.csv", "--model", o / "model.json", "--out", o)
    assert code == 0 and (o / "metrics.csv").exists()
    env_path = o / "maps" / "map002.json"
    from partialchan.envmap import load_map
    env = load_map(env_path)
    free = np.argwhere(env.cells == 0)
    tx = env.cell_center(*(int(x) for x in free[0]))
    rx = env.cell_center(*(int(x) for x in free[-1]))
    code, out, _ = _run(capsys, "predict", "--map", env_path, "--model", o / "model.json",
                        "--tx", f"{tx.x},{tx.y}", "--rx", f"{rx.x},{rx.y}", "--out", o)
    assert code == 0
    pred = json.loads(out)
    assert sum(pred["posterior"].values()) == pytest.approx(1.0)
    code, _, _ = _run(capsys, "predict", "--map", env_path, "--model", o / "model.json",
                      "--tx", f"{tx.x},{tx.y}", "--stride", 6, "--out", o)
    assert code == 0 and (o / "coverage_grid.csv").exists()


def test_errors_are_single_machine_readable_lines(tmp_path, capsys):
    code, _, err = _run(capsys, "train", "--dataset", tmp_path / "missing.csv", "--out", tmp_path)
    assert code != 0
    assert len(err.strip().splitlines()) == 1
    msg = json.loads(err)
    assert msg["error"] == "CliError" and "missing.csv" in msg["message"]
    (tmp_path / "bad.json").write_text("{not json")
    save_map(EnvironmentMap(np.zeros((8, 8), np.uint8)), tmp_path / "m.json")
    code, _, err = _run(capsys, "predict", "--map", tmp_path / "m.json", "--model", tmp_path / "bad.json",
                        "--tx", "0.5,0.5", "--rx", "1,1", "--out", tmp_path)
    assert code != 0 and json.loads(err)["error"] == "CorruptModelFile"
    code, _, err = _run(capsys, "trace", "--map", tmp_path / "m.json", "--tx", "0.5,0.5", "--rx", "0.5,0.5",
                        "--out", tmp_path)
    assert code != 0 and json.loads(err)["error"] == "InvalidEndpoint"


def test_usage_error_prints_help(capsys):
    with pytest.raises(SystemExit) as e:
        main(["trace", "--map", "x.json"])
    assert e.value.code == 2
    err = capsys.readouterr().err
    assert "--tx" in err and "usage:" in err


@pytest.mark.slow
def test_demo_is_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        assert _run(capsys, "demo", "--seed", 1, "--out", tmp_path / d)[0] == 0
    for name in ("dataset.csv", "model.json", "metrics.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
