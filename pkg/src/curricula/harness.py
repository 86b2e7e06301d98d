"""Experiment orchestration: multi-seed runs, k sweeps, transfer matrices.

Run directories hold the config copy, the seed list, per-seed reports, and a
content digest; every summary number is recomputable from the stored
per-seed reports alone.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset, load_dataset
from .difficulty import DifficultyPartition, partition_scores, score_dataset
from .schedule import CurriculumConfig, preset
from .strategies import make_strategy
from .trainer import TrainerConfig, TrainReport, train


def mean_stderr(values) -> tuple[float, float]:
    """Mean and standard error (sample std over sqrt(n); 0 for one value)."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def parse_config(path) -> dict[str, str]:
    """Flat key = value config file; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def dump_config(cfg: dict[str, str]) -> str:
    return "\n".join(f"{k} = {cfg[k]}" for k in sorted(cfg)) + "\n"


def load_split_dir(data_dir) -> tuple[Dataset, Dataset, Dataset]:
    data_dir = Path(data_dir)
    return (
        load_dataset(data_dir / "train.jsonl", split_tag="train"),
        load_dataset(data_dir / "dev.jsonl", split_tag="dev"),
        load_dataset(data_dir / "test.jsonl", split_tag="test"),
    )


def resolve_curriculum(value: str, k: int) -> CurriculumConfig | None:
    """A curriculum flag is empty, 'preset:NAME', or a JSON config path."""
    if not value:
        return None
    if value.startswith("preset:"):
        return preset(value.split(":", 1)[1], k)
    return CurriculumConfig.load(value)


def trainer_config_from(cfg: dict[str, str], seed: int = 0) -> TrainerConfig:
    return TrainerConfig(
        model=cfg.get("model", "linear"),
        hidden=int(cfg.get("hidden", 16)),
        optimizer=cfg.get("optimizer", "adam"),
        learning_rate=float(cfg.get("learning_rate", 1e-2)),
        batch_size=int(cfg.get("batch_size", 16)),
        epochs=int(cfg.get("epochs", 10)),
        seed=seed,
        eval_every=float(cfg.get("eval_every", 0.5)),
    )


def _write_summary(path, name: str, dev_accs, test_accs) -> None:
    dev_mean, dev_se = mean_stderr(dev_accs)
    test_mean, test_se = mean_stderr(test_accs)
    lines = [
        "name,n_seeds,dev_mean,dev_stderr,test_mean,test_stderr",
        f"{name},{len(dev_accs)},{dev_mean!r},{dev_se!r},{test_mean!r},{test_se!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def _run_digest(run_dir: Path) -> str:
    digest = hashlib.sha256()
    names = sorted(
        p for p in run_dir.rglob("*")
        if p.is_file() and p.name != "digest.txt"
    )
    for p in names:
        digest.update(str(p.relative_to(run_dir)).encode())
        digest.update(p.read_bytes())
    return digest.hexdigest()


def experiment(config, out_dir=None) -> dict:
    """Run one multi-seed experiment from a flat config.

    Keys: data_dir (required), difficulty (entropy|loss), scheme
    (quantile|kmeans), k, strategy (none|spl|superloss|dp|hardmining|
    curriculum), curriculum (path or preset:NAME), seeds (comma separated),
    plus trainer overrides (model, hidden, optimizer, learning_rate,
    batch_size, epochs, eval_every) and name/out_dir.
    """
    cfg = parse_config(config) if isinstance(config, (str, Path)) else dict(config)
    run_dir = Path(cfg.get("out_dir") or out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    train_ds, dev_ds, test_ds = load_split_dir(cfg["data_dir"])
    method = cfg.get("difficulty", "entropy")
    k = int(cfg.get("k", 3))
    prior_cfg = trainer_config_from(cfg, seed=int(cfg.get("prior_seed", 0)))
    scores = score_dataset(train_ds, method, prior_cfg)
    partition = partition_scores(scores, k, scheme=cfg.get("scheme", "quantile"), method=method)

    curriculum = resolve_curriculum(cfg.get("curriculum", ""), k)
    kind = cfg.get("strategy", "curriculum" if curriculum is not None else "none")
    strategy = make_strategy(
        kind, curriculum=curriculum,
        lam=float(cfg.get("lambda", 1.2)), alpha=float(cfg.get("alpha", 0.9)),
        tau=float(cfg["tau"]) if "tau" in cfg else None,
    )
    seeds = [int(s) for s in cfg.get("seeds", "0,1,2,3,4").split(",")]
    name = cfg.get("name", f"{method}-{kind}")

    dev_accs, test_accs, reports = [], [], []
    for seed in seeds:
        run_cfg = replace(trainer_config_from(cfg, seed=seed), weight_strategy=strategy)
        report = train(train_ds, dev_ds, test_ds, partition, run_cfg, curriculum)
        seed_dir = run_dir / f"seed_{seed}"
        seed_dir.mkdir(exist_ok=True)
        report.save(seed_dir / "report.json")
        report.write_curve_csv(seed_dir / "curve.csv")
        report.write_group_weights_csv(seed_dir / "group_weights.csv")
        if curriculum is not None and curriculum.non_monotonic:
            report.write_reassignment_csv(seed_dir / "reassignments.csv")
        dev_accs.append(report.best_dev_accuracy)
        test_accs.append(report.test_accuracy)
        reports.append(report)

    (run_dir / "config.txt").write_text(dump_config({str(k_): str(v) for k_, v in cfg.items()}))
    (run_dir / "seeds.txt").write_text("\n".join(str(s) for s in seeds) + "\n")
    _write_summary(run_dir / "summary.csv", name, dev_accs, test_accs)
    (run_dir / "digest.txt").write_text(_run_digest(run_dir) + "\n")
    return {
        "name": name, "seeds": seeds, "dev_accuracies": dev_accs,
        "test_accuracies": test_accs, "summary_path": run_dir / "summary.csv",
        "reports": reports,
    }


def rebuild_summary(run_dir) -> Path:
    """Recompute summary.csv purely from the stored per-seed reports."""
    run_dir = Path(run_dir)
    cfg = parse_config(run_dir / "config.txt")
    seeds = [int(s) for s in (run_dir / "seeds.txt").read_text().split()]
    dev_accs, test_accs = [], []
    for seed in seeds:
        report = TrainReport.load(run_dir / f"seed_{seed}" / "report.json")
        dev_accs.append(report.best_dev_accuracy)
        test_accs.append(report.test_accuracy)
    name = cfg.get("name", "run")
    _write_summary(run_dir / "summary.csv", name, dev_accs, test_accs)
    return run_dir / "summary.csv"


def run_seeds(train_ds, dev_ds, test_ds, partition, base_cfg: TrainerConfig,
              curriculum, seeds) -> list[TrainReport]:
    return [
        train(train_ds, dev_ds, test_ds, partition, replace(base_cfg, seed=s), curriculum)
        for s in seeds
    ]


def sweep_k(train_ds, dev_ds, test_ds, ks, method: str, seeds,
            base_cfg: TrainerConfig, scheme: str = "quantile") -> list[dict]:
    """Accuracy of the inc preset as the number of difficulty groups varies."""
    prior_cfg = replace(base_cfg, seed=base_cfg.seed)
    scores = score_dataset(train_ds, method, prior_cfg)
    rows = []
    for k in ks:
        partition = partition_scores(scores, k, scheme=scheme, method=method)
        curriculum = preset("inc", k)
        reports = run_seeds(train_ds, dev_ds, test_ds, partition, base_cfg, curriculum, seeds)
        dev_mean, dev_se = mean_stderr([r.best_dev_accuracy for r in reports])
        test_mean, test_se = mean_stderr([r.test_accuracy for r in reports])
        rows.append({"k": k, "dev_mean": dev_mean, "dev_stderr": dev_se,
                     "test_mean": test_mean, "test_stderr": test_se})
    return rows


def write_sweep_csv(path, rows) -> None:
    lines = ["k,dev_mean,dev_stderr,test_mean,test_stderr"]
    for row in rows:
        lines.append(f"{row['k']},{row['dev_mean']!r},{row['dev_stderr']!r},"
                     f"{row['test_mean']!r},{row['test_stderr']!r}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class TransferTarget:
    """One row of a transfer matrix: a dataset/partition/model combination."""

    name: str
    train: Dataset
    dev: Dataset
    test: Dataset
    partition: DifficultyPartition
    trainer_cfg: TrainerConfig


def transfer_matrix(curricula: list[tuple[str, CurriculumConfig]],
                    targets: list[TransferTarget], seeds):
    """Mean test accuracy of every curriculum on every target.

    Returns (row_names, col_names, raw, normalized) where each row of
    ``normalized`` is scaled so its maximum is 100. Row normalization
    preserves the within-row ordering of raw accuracies.
    """
    for name, config in curricula:
        for target in targets:
            if config.k != target.partition.k:
                raise ValueError(
                    f"curriculum {name!r} has k={config.k}; target {target.name!r} "
                    f"partition has k={target.partition.k}")
    raw = np.zeros((len(targets), len(curricula)))
    for i, target in enumerate(targets):
        for j, (_, config) in enumerate(curricula):
            reports = run_seeds(target.train, target.dev, target.test,
                                target.partition, target.trainer_cfg, config, seeds)
            raw[i, j] = float(np.mean([r.test_accuracy for r in reports]))
    normalized = raw / raw.max(axis=1, keepdims=True) * 100.0
    row_names = [t.name for t in targets]
    col_names = [name for name, _ in curricula]
    return row_names, col_names, raw, normalized


def write_matrix_csv(path, row_names, col_names, matrix) -> None:
    lines = ["target," + ",".join(col_names)]
    for name, row in zip(row_names, np.asarray(matrix)):
        lines.append(name + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
