import json
import os
import subprocess

import pytest

import compo_synth as cs


def tiny_config(tmp_path, **overrides):
    sub = {
        "state_box": [[0.0, 1.0]],
        "internal_box": [[0.0, 1.0]],
        "inputs": [0.0, 0.5],
        "a": [[0.5], [0.5]],
        "b": [1.0],
        "D": [[0.1]],
        "c": [0.1],
        "r": [0.2],
        "lipschitz_x": 0.1,
        "lipschitz_w": 0.1,
    }
    cfg = {
        "seed": 3,
        "network": {
            "builder": "custom",
            "custom": {"subsystems": [sub, sub], "wiring": [[[1, 0]], [[0, 0]]]},
        },
        "grids": {"delta": 0.25, "mu": 0.5, "internal_grid": "cartesian"},
        "spec": {"formula": "G[0,2] low", "horizon": 2, "atoms": {"low": [[0.0, 1.0]]}},
        "learn": {"episodes": 3000},
        "evaluate": {"samples": 2000, "x0": [0.4]},
    }
    cfg.update(overrides)
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_penalty_value():
    assert cs.penalty(0.004807, 20) == pytest.approx(0.0962666671, abs=1e-6)
    assert cs.penalty(0.0, 5) == 0.0


def test_lower_bound_assembly():
    r = cs.lower_bound([0.999] * 3, [0.001] * 3)
    assert r["lower"] == pytest.approx(r["product"] - r["penalty"], abs=1e-12)
    assert not r["vacuous"]
    assert cs.lower_bound([0.9] * 4, [0.5] * 4)["vacuous"]


def test_wilson_interval():
    lo, hi = cs.wilson_interval(95, 100)
    assert 0.0 < lo < 0.95 < hi < 1.0


def test_abstraction_error_scaling():
    base = cs.abstraction_error(5, 1.0, 0.001, 0.4807, 0.1, 0.004807)
    assert base == pytest.approx(5 * (0.001 * 0.4807 + 0.1 * 0.004807), rel=1e-12)
    assert cs.abstraction_error(10, 1.0, 0.001, 0.4807, 0.1, 0.004807) == pytest.approx(
        2 * base, rel=1e-12
    )


def test_grid_roundtrip():
    g = cs.Grid([0.0], [1.0], 0.25)
    assert g.n_cells == 4
    assert g.sink == 4
    assert g.quantize([0.3]) == 1
    assert g.representative(1) == pytest.approx([0.375])
    assert g.quantize([2.0]) == g.sink


def test_spec_info_and_words():
    info = cs.spec_info("G[0,3] safe", 3)
    assert info["atoms"] == ["safe"]
    assert info["states"] >= 3
    assert cs.word_accepted("G[0,3] safe", 3, [1, 1, 1, 1])
    assert not cs.word_accepted("G[0,3] safe", 3, [1, 1, 1, 0])


def test_network_presets():
    info = cs.network_info("room", 5)
    assert info["n"] == 5
    assert info["internal_dims"] == 2
    info = cs.network_info("traffic", 4)
    assert info["n"] == 4


def test_pipeline_roundtrip(tmp_path):
    cfg = tiny_config(tmp_path)
    out = str(tmp_path / "out")

    report = cs.run_learn(cfg, out_dir=out)
    assert "state-action pairs per subsystem:" in report
    for name in ("manifest.json", "qtable_g0.bin", "dfa.txt"):
        assert (tmp_path / "out" / name).exists()

    report = cs.run_bound(cfg, out_dir=out)
    assert "p_low:" in report and "p_sampled:" in report

    report = cs.run_evaluate(cfg, out_dir=out)
    assert "p_sampled:" in report
    assert (tmp_path / "out" / "percentiles.csv").exists()

    report = cs.run_oracle(cfg, out_dir=out)
    assert "v_minimax=" in report and "p_plus=" in report

    report = cs.run_export_traj(cfg, out_dir=out, samples=5)
    assert (tmp_path / "out" / "trajectories.csv").exists()
    header = (tmp_path / "out" / "trajectories.csv").read_text().splitlines()[0]
    assert header == "trajectory,time,subsystem,component,value"


def test_artifacts_pinned_to_config(tmp_path):
    cfg = tiny_config(tmp_path)
    out = str(tmp_path / "out")
    cs.run_learn(cfg, out_dir=out)
    changed = tiny_config(
        tmp_path, grids={"delta": 0.5, "mu": 0.5, "internal_grid": "cartesian"}
    )
    with pytest.raises(cs.ArtifactMismatch):
        cs.run_bound(changed, out_dir=out)


def test_oracle_requires_model(tmp_path):
    cfg_path = tmp_path / "tiny.json"
    cfg = json.loads(open(tiny_config(tmp_path)).read())
    cfg["network"]["model_available"] = False
    cfg_path.write_text(json.dumps(cfg))
    with pytest.raises(cs.ModelUnavailable):
        cs.run_oracle(str(cfg_path), out_dir=str(tmp_path / "out2"))


def test_bad_config_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"seed": 1, "unknown_section": {}}))
    with pytest.raises(ValueError):
        cs.run_learn(str(path), out_dir=str(tmp_path / "out3"))


def test_cli_binary(tmp_path):
    binary = os.environ.get("COMPO_SYNTH_BIN")
    if not binary:
        pytest.skip("binary path not provided")
    cfg = tiny_config(tmp_path)
    out = str(tmp_path / "cli_out")

    done = subprocess.run(
        [binary, "learn", "--config", cfg, "--out", out], capture_output=True, text=True
    )
    assert done.returncode == 0, done.stderr
    assert "wrote" in done.stdout

    done = subprocess.run(
        [binary, "bound", "--config", cfg, "--out", out], capture_output=True, text=True
    )
    assert done.returncode == 0, done.stderr
    assert "p_low:" in done.stdout

    done = subprocess.run(
        [binary, "learn", "--config", str(tmp_path / "missing.json")],
        capture_output=True,
        text=True,
    )
    assert done.returncode == 2


def test_shipped_configs_parse(tmp_path):
    cfg_dir = os.environ.get("COMPO_SYNTH_CONFIGS")
    if not cfg_dir:
        pytest.skip("config dir not provided")
    binary = os.environ.get("COMPO_SYNTH_BIN")
    if not binary:
        pytest.skip("binary path not provided")
    for name in ("room.json", "traffic.json"):
        path = os.path.join(cfg_dir, name)
        assert os.path.exists(path)
        done = subprocess.run(
            [binary, "evaluate", "--config", path, "--out", str(tmp_path / "nope")],
            capture_output=True,
            text=True,
        )
        assert done.returncode == 2
        assert "manifest" in done.stderr
