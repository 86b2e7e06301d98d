import json

import pytest

from curricula.cli import main


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_data")
    assert main(["data", "synth", "--n", "240", "--classes", "3", "--annotators", "5",
                 "--noise", "0.6", "--seed", "5", "--out-dir", str(out)]) == 0
    return out


def test_data_synth_outputs(data_dir):
    for name in ("train.jsonl", "dev.jsonl", "test.jsonl", "meta.json"):
        assert (data_dir / name).exists()
    meta = json.loads((data_dir / "meta.json").read_text())
    assert meta["n"] == 240
    assert sum(meta["sizes"].values()) == 240


def test_data_synth_deterministic(tmp_path, data_dir):
    again = tmp_path / "again"
    main(["data", "synth", "--n", "240", "--classes", "3", "--annotators", "5",
          "--noise", "0.6", "--seed", "5", "--out-dir", str(again)])
    assert (again / "train.jsonl").read_bytes() == (data_dir / "train.jsonl").read_bytes()


def test_data_inspect(data_dir, capsys):
    assert main(["data", "inspect", str(data_dir / "train.jsonl")]) == 0
    out = capsys.readouterr().out
    assert "num_classes: 3" in out
    assert "entropy_mean:" in out


def test_difficulty_score_sidecar(data_dir, tmp_path):
    sidecar = tmp_path / "difficulty.jsonl"
    hist = tmp_path / "hist.csv"
    assert main(["difficulty", "score", "--data", str(data_dir / "train.jsonl"),
                 "--method", "entropy", "--k", "3", "--partition", "quantile",
                 "--out", str(sidecar), "--hist", str(hist)]) == 0
    rows = [json.loads(line) for line in sidecar.read_text().splitlines()]
    assert all(set(r) == {"id", "psi", "group"} for r in rows)
    assert all(0.0 <= r["psi"] <= 1.0 for r in rows)
    assert {r["group"] for r in rows} <= {0, 1, 2}
    lines = hist.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count,group"
    assert sum(int(line.split(",")[2]) for line in lines[1:]) == len(rows)


def test_curriculum_preset_and_show(tmp_path):
    cfg = tmp_path / "inc.json"
    assert main(["curriculum", "preset", "--name", "inc", "--k", "3", "--out", str(cfg)]) == 0
    data = json.loads(cfg.read_text())
    assert data["k"] == 3 and len(data["groups"]) == 3
    traj = tmp_path / "traj.csv"
    assert main(["curriculum", "show", str(cfg), "--steps", "5", "--out", str(traj)]) == 0
    lines = traj.read_text().splitlines()
    assert len(lines) == 4  # header + one row per group
    assert lines[1].startswith("0,")


def test_train_command(data_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--data-dir", str(data_dir), "--curriculum", "preset:inc",
                 "--difficulty", "entropy", "--k", "3", "--seed", "1",
                 "--epochs", "2", "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert 0.0 <= report["test_accuracy"] <= 1.0
    assert (out / "curve.csv").exists()
    assert (out / "group_weights.csv").exists()


def test_train_command_with_strategy(data_dir, tmp_path):
    out = tmp_path / "run_spl"
    assert main(["train", "--data-dir", str(data_dir), "--strategy", "spl",
                 "--lambda", "1.2", "--k", "3", "--seed", "1",
                 "--epochs", "2", "--out-dir", str(out)]) == 0
    assert (out / "report.json").exists()


def test_discover_command(data_dir, tmp_path):
    store = tmp_path / "trials.jsonl"
    best = tmp_path / "best.json"
    summary = tmp_path / "top.csv"
    assert main(["discover", "--data-dir", str(data_dir), "--k", "3",
                 "--budget", "12", "--seeds", "0", "--epochs", "1",
                 "--store", str(store), "--out", str(best),
                 "--top-summary", str(summary), "--top-n", "5"]) == 0
    assert len(store.read_text().splitlines()) == 12
    config = json.loads(best.read_text())
    assert config["k"] == 3
    assert summary.read_text().startswith("group,t,mean,ci_lower,ci_upper")


def test_sweep_k_command(data_dir, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-k", "--data-dir", str(data_dir), "--ks", "2,3",
                 "--seeds", "0", "--epochs", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_transfer_command(data_dir, tmp_path):
    out = tmp_path / "transfer.csv"
    assert main(["transfer", "--curriculum", "preset:inc", "--curriculum", "preset:constant",
                 "--target", f"small={data_dir}:entropy:linear",
                 "--k", "3", "--seeds", "0", "--epochs", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "target,inc,constant"
    values = [float(v) for v in lines[1].split(",")[1:]]
    assert max(values) == 100.0
    assert out.with_suffix(".raw.csv").exists()


def test_report_command(data_dir, tmp_path, capsys):
    run = tmp_path / "exp"
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        f"name = cli\ndata_dir = {data_dir}\nk = 3\nstrategy = none\n"
        f"seeds = 0,1\nepochs = 2\nout_dir = {run}\n")
    assert main(["experiment", str(cfg)]) == 0
    capsys.readouterr()
    original = (run / "summary.csv").read_bytes()
    (run / "summary.csv").unlink()
    assert main(["report", "--run-dir", str(run)]) == 0
    assert (run / "summary.csv").read_bytes() == original
