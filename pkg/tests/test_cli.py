import json
import os

import pytest

from vfsplan.cli import main


def write_signal(path, rows, header="x"):
    lines = [header] + [str(v) for v in rows]
    path.write_text("\n".join(lines) + "\n")


def test_monitor_sat(tmp_path, capsys):
    sig = tmp_path / "sig.csv"
    write_signal(sig, [0.5, 0.5, 0.5])
    code = main(["monitor", "--formula", "x>0", "--signal", str(sig), "--t", "0"])
    out = capsys.readouterr().out
    assert out.startswith("0.500000000")
    assert "SAT" in out
    assert code == 0


def test_monitor_unsat_exit_code(tmp_path, capsys):
    sig = tmp_path / "sig.csv"
    write_signal(sig, [0.0, 0.0, 0.0])
    code = main(["monitor", "--formula", "F[0,2] x>0.5", "--signal", str(sig)])
    assert code == 1
    assert "UNSAT" in capsys.readouterr().out


def test_monitor_boundary(tmp_path, capsys):
    sig = tmp_path / "sig.csv"
    write_signal(sig, [0.5])
    code = main(["monitor", "--formula", "x>=0.5", "--signal", str(sig)])
    assert code == 1
    assert "BOUNDARY" in capsys.readouterr().out


def test_monitor_parse_error(tmp_path, capsys):
    sig = tmp_path / "sig.csv"
    write_signal(sig, [0.5])
    code = main(["monitor", "--formula", "F[0,2 x>0.5", "--signal", str(sig)])
    assert code == 2
    assert "position" in capsys.readouterr().err


def test_monitor_signal_too_short(tmp_path, capsys):
    sig = tmp_path / "sig.csv"
    write_signal(sig, [0.0, 0.0])
    code = main(["monitor", "--formula", "F[0,5] x>0.5", "--signal", str(sig)])
    assert code == 3


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """collect -> train once; downstream commands reuse the artifacts."""
    root = tmp_path_factory.mktemp("pipeline")
    config = {
        "world": {"tau": 5, "seed": 0},
        "planner": {"horizon": 4, "iterations": 25, "seed": 0,
                    "replan_interval": 2},
        "collect": {"episodes": 30, "steps_per_episode": 20},
        "train": {"dataset": str(root / "collect" / "dataset.csv"),
                  "epochs": 40, "hidden_width": 32},
        "plan": {"model": str(root / "train" / "model.json"),
                 "formula": "F[0,4] R>0.8"},
        "mpc": {"model": str(root / "train" / "model.json"),
                "formula": "F[0,4] R>0.8"},
        "bench": {"model": str(root / "train" / "model.json"),
                  "families": "stability", "samples": 2},
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["collect", "--config", str(cfg_path), "--seed", "0",
                 "--out", str(root / "collect")]) == 0
    assert main(["train", "--config", str(cfg_path), "--seed", "0",
                 "--out", str(root / "train")]) == 0
    return root, cfg_path


def test_collect_outputs(pipeline):
    root, _ = pipeline
    lines = (root / "collect" / "dataset.csv").read_text().strip().splitlines()
    assert lines[0].startswith("z0,")
    assert len(lines) == 1 + 30 * (20 // 5)
    manifest = json.loads((root / "collect" / "manifest.json").read_text())
    assert manifest["subcommand"] == "collect"
    assert manifest["seed"] == 0


def test_train_outputs(pipeline):
    root, _ = pipeline
    report = json.loads((root / "train" / "loss_report.json").read_text())
    assert report["records"] == 120
    assert report["holdout_mse"] >= 0
    assert (root / "train" / "model.json").exists()


def test_plan_is_reproducible(pipeline, tmp_path):
    root, cfg_path = pipeline
    out1, out2 = tmp_path / "p1", tmp_path / "p2"
    for out in (out1, out2):
        assert main(["plan", "--config", str(cfg_path), "--seed", "7",
                     "--out", str(out)]) == 0
    doc = json.loads((out1 / "plan.json").read_text())
    assert doc["formula"] == "F[0,4] R>0.8"
    assert len(doc["skills"]) == 4
    assert len(doc["z_trajectory"]) == 5
    assert (out1 / "plan.json").read_bytes() == (out2 / "plan.json").read_bytes()
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


def test_plan_seed_changes_output(pipeline, tmp_path):
    root, cfg_path = pipeline
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["plan", "--config", str(cfg_path), "--seed", "1",
                 "--out", str(out1)]) == 0
    assert main(["plan", "--config", str(cfg_path), "--seed", "2",
                 "--out", str(out2)]) == 0
    a = json.loads((out1 / "plan.json").read_text())
    b = json.loads((out2 / "plan.json").read_text())
    assert a["z_trajectory"] != b["z_trajectory"]


def test_mpc_outputs(pipeline, tmp_path):
    root, cfg_path = pipeline
    out = tmp_path / "m"
    assert main(["mpc", "--config", str(cfg_path), "--seed", "3",
                 "--out", str(out)]) == 0
    doc = json.loads((out / "run.json").read_text())
    assert set(doc) >= {"formula", "skills", "realized_robustness",
                        "ground_truth_robustness", "z_trajectory", "seed"}
    traj_lines = (out / "trajectory.csv").read_text().strip().splitlines()
    assert traj_lines[0] == "step,x,y,heading,active_skill"
    assert len(traj_lines) == 1 + 1 + 4 * 5  # header + initial state + T*tau


def test_bench_outputs_reproducible(pipeline, tmp_path):
    root, cfg_path = pipeline
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    for out in (out1, out2):
        assert main(["bench", "--config", str(cfg_path), "--seed", "5",
                     "--samples", "2", "--families", "stability",
                     "--out", str(out)]) == 0
    for name in ("records.csv", "summary.json", "boxplot.svg", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    lines = (out1 / "records.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_bench_family_counting(pipeline, tmp_path):
    root, cfg_path = pipeline
    out = tmp_path / "bb"
    assert main(["bench", "--config", str(cfg_path), "--seed", "6",
                 "--samples", "1", "--families", "all", "--iterations", "10",
                 "--out", str(out)]) == 0
    lines = (out / "records.csv").read_text().strip().splitlines()
    assert len(lines) == 4


def test_collect_default_sizing_yields_ten_thousand_rows(tmp_path):
    # default collect sizing is 1,000 episodes of 10 macro-steps each; a
    # tiny tau keeps the simulation cheap without changing the counting
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"world": {"tau": 2}}))
    out = tmp_path / "collect"
    assert main(["collect", "--config", str(cfg), "--seed", "0",
                 "--out", str(out)]) == 0
    lines = (out / "dataset.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 10000


def test_train_missing_dataset(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"train": {"dataset": str(tmp_path / "nope.csv")}}))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "t")]) == 2


def test_plan_missing_model(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"plan": {"model": str(tmp_path / "nope.json")}}))
    assert main(["plan", "--config", str(cfg), "--formula", "R>0.8",
                 "--out", str(tmp_path / "p")]) == 2
