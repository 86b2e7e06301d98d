import numpy as np
import pytest

from curricula import (
    TrainerConfig,
    TransferTarget,
    entropy_scores,
    experiment,
    mean_stderr,
    partition_quantile,
    preset,
    rebuild_summary,
    save_dataset,
    sweep_k,
    synthesize,
    transfer_matrix,
)
from curricula.harness import dump_config, parse_config, write_matrix_csv, write_sweep_csv


def test_mean_stderr_hand_computed():
    mean, se = mean_stderr([0.70, 0.71, 0.72, 0.73, 0.74])
    assert mean == pytest.approx(0.72)
    assert se == pytest.approx(0.0071, abs=1e-4)


def test_single_value_stderr_zero():
    mean, se = mean_stderr([0.5])
    assert mean == 0.5 and se == 0.0


def test_parse_config_roundtrip(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("# comment\nname = demo\nk = 3\nseeds = 1,2\n")
    cfg = parse_config(path)
    assert cfg == {"name": "demo", "k": "3", "seeds": "1,2"}
    assert "name = demo" in dump_config(cfg)


def test_parse_config_rejects_bad_line(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("just words\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_config(path)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    train, dev, test = synthesize(240, 3, 5, 0.6, seed=5)
    save_dataset(train, out / "train.jsonl")
    save_dataset(dev, out / "dev.jsonl")
    save_dataset(test, out / "test.jsonl")
    return out


def experiment_config(data_dir, out_dir, **overrides):
    cfg = {
        "name": "demo",
        "data_dir": str(data_dir),
        "difficulty": "entropy",
        "k": "3",
        "strategy": "curriculum",
        "curriculum": "preset:inc",
        "seeds": "0,1,2",
        "epochs": "2",
        "out_dir": str(out_dir),
    }
    cfg.update(overrides)
    return cfg


def test_experiment_writes_run_directory(data_dir, tmp_path):
    out = tmp_path / "run"
    result = experiment(experiment_config(data_dir, out))
    assert (out / "config.txt").exists()
    assert (out / "seeds.txt").read_text().split() == ["0", "1", "2"]
    assert (out / "digest.txt").exists()
    for seed in (0, 1, 2):
        assert (out / f"seed_{seed}" / "report.json").exists()
        assert (out / f"seed_{seed}" / "curve.csv").exists()
    header, row = (out / "summary.csv").read_text().splitlines()
    assert header == "name,n_seeds,dev_mean,dev_stderr,test_mean,test_stderr"
    assert row.startswith("demo,3,")
    assert len(result["reports"]) == 3


def test_summary_recomputable_from_reports(data_dir, tmp_path):
    out = tmp_path / "run"
    experiment(experiment_config(data_dir, out))
    original = (out / "summary.csv").read_bytes()
    (out / "summary.csv").unlink()
    rebuild_summary(out)
    assert (out / "summary.csv").read_bytes() == original


def test_experiment_rerun_is_byte_identical(data_dir, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    experiment(experiment_config(data_dir, out_a))
    experiment(experiment_config(data_dir, out_b))
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()
    assert (out_a / "seed_0" / "report.json").read_bytes() == (out_b / "seed_0" / "report.json").read_bytes()


def test_sweep_k_rows(tmp_path):
    train, dev, test = synthesize(240, 3, 5, 0.6, seed=5)
    rows = sweep_k(train, dev, test, [2, 3], "entropy", [0, 1], TrainerConfig(epochs=2))
    assert [row["k"] for row in rows] == [2, 3]
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,dev_mean,dev_stderr,test_mean,test_stderr"
    assert len(lines) == 3


def test_sweep_k_rejects_k_one(tmp_path):
    train, dev, test = synthesize(240, 3, 5, 0.6, seed=5)
    with pytest.raises(ValueError):
        sweep_k(train, dev, test, [1], "entropy", [0], TrainerConfig(epochs=2))


def test_row_normalization_example():
    raw = np.array([[0.70, 0.80]])
    normalized = raw / raw.max(axis=1, keepdims=True) * 100.0
    assert normalized[0] == pytest.approx([87.5, 100.0], abs=1e-12)


def make_target(name, seed, model="linear", hidden=16):
    train, dev, test = synthesize(200, 3, 5, 0.6, seed=seed)
    partition = partition_quantile(entropy_scores(train), 3)
    cfg = TrainerConfig(epochs=2, model=model, hidden=hidden)
    return TransferTarget(name, train, dev, test, partition, cfg)


def test_transfer_matrix_shape_and_normalization(tmp_path):
    targets = [make_target("a", 1), make_target("b", 2)]
    curricula = [("inc", preset("inc", 3)), ("constant", preset("constant", 3))]
    rows, cols, raw, normalized = transfer_matrix(curricula, targets, seeds=[0, 1])
    assert rows == ["a", "b"] and cols == ["inc", "constant"]
    assert raw.shape == (2, 2)
    assert np.allclose(normalized.max(axis=1), 100.0)
    # normalization preserves within-row ordering
    for i in range(2):
        assert np.argsort(raw[i]).tolist() == np.argsort(normalized[i]).tolist()
    path = tmp_path / "matrix.csv"
    write_matrix_csv(path, rows, cols, normalized)
    lines = path.read_text().splitlines()
    assert lines[0] == "target,inc,constant"


def test_transfer_matrix_single_column_all_hundred():
    targets = [make_target("a", 1)]
    curricula = [("inc", preset("inc", 3))]
    _, _, _, normalized = transfer_matrix(curricula, targets, seeds=[0])
    assert np.allclose(normalized, 100.0)


def test_transfer_matrix_rejects_k_mismatch():
    targets = [make_target("a", 1)]
    with pytest.raises(ValueError, match="k="):
        transfer_matrix([("bad", preset("inc", 4))], targets, seeds=[0])
