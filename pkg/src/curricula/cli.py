"""Command-line front end.

Subcommands: data, difficulty, curriculum, train, discover, sweep-k,
transfer, report. All tables are emitted as CSV.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, search
from .data import difficulty_balanced_subsample, load_dataset, save_dataset, synthesize
from .difficulty import entropy_score, partition_scores, score_dataset
from .schedule import CurriculumConfig, preset, trajectory
from .strategies import make_strategy
from .trainer import train


def _add_trainer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="linear", choices=["linear", "mlp"])
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--optimizer", default="adam", choices=["sgd", "adam"])
    p.add_argument("--learning-rate", type=float, default=1e-2)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--eval-every", type=float, default=0.5)


def _trainer_cfg(args, seed: int = 0):
    from .trainer import TrainerConfig

    return TrainerConfig(
        model=args.model, hidden=args.hidden, optimizer=args.optimizer,
        learning_rate=args.learning_rate, batch_size=args.batch_size,
        epochs=args.epochs, seed=seed, eval_every=args.eval_every,
    )


def _load_splits(data_dir):
    return harness.load_split_dir(data_dir)


def _partition_for(args, train_ds):
    scores = score_dataset(train_ds, args.difficulty, _trainer_cfg(args, seed=args.prior_seed))
    return partition_scores(scores, args.k, scheme=args.scheme, method=args.difficulty)


def cmd_data_synth(args) -> int:
    train_ds, dev_ds, test_ds = synthesize(
        args.n, args.classes, args.annotators, args.noise, args.seed, dim=args.dim)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train_ds, out / "train.jsonl")
    save_dataset(dev_ds, out / "dev.jsonl")
    save_dataset(test_ds, out / "test.jsonl")
    meta = {"n": args.n, "classes": args.classes, "annotators": args.annotators,
            "noise": args.noise, "seed": args.seed, "dim": args.dim,
            "sizes": {"train": len(train_ds), "dev": len(dev_ds), "test": len(test_ds)}}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote {len(train_ds)}/{len(dev_ds)}/{len(test_ds)} samples to {out}")
    return 0


def cmd_data_inspect(args) -> int:
    ds = load_dataset(args.path, fmt=args.format)
    print(f"path: {args.path}")
    print(f"samples: {len(ds)}")
    print(f"feature_dim: {ds.dim}")
    print(f"num_classes: {ds.num_classes}")
    labels = ds.label_vector()
    hist = np.bincount(labels, minlength=ds.num_classes)
    print("label_histogram: " + " ".join(f"{c}:{int(n)}" for c, n in enumerate(hist)))
    with_counts = [s for s in ds.samples if s.annotation_counts is not None]
    print(f"with_annotation_counts: {len(with_counts)}/{len(ds)}")
    if with_counts:
        entropies = [entropy_score(s.annotation_counts) for s in with_counts]
        print(f"entropy_mean: {float(np.mean(entropies)):.6f}")
        print(f"entropy_max: {float(np.max(entropies)):.6f}")
    return 0


def cmd_difficulty_score(args) -> int:
    train_ds = load_dataset(args.data)
    scores = score_dataset(train_ds, args.method, _trainer_cfg(args, seed=args.prior_seed))
    partition = partition_scores(scores, args.k, scheme=args.partition, method=args.method)
    lines = []
    for s in train_ds.samples:
        rec = {"id": s.id, "psi": scores[s.id], "group": partition.group_of[s.id]}
        lines.append(json.dumps(rec, separators=(",", ":")))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote difficulty sidecar to {args.out}")
    if args.hist:
        values = np.array([scores[i] for i in sorted(scores)])
        edges = np.linspace(0.0, 1.0, args.bins + 1)
        counts, _ = np.histogram(values, bins=edges)
        boundaries = np.asarray(partition.boundaries)
        rows = ["bin_lo,bin_hi,count,group"]
        for b in range(args.bins):
            mid = (edges[b] + edges[b + 1]) / 2.0
            group = int(np.searchsorted(boundaries, mid, side="left"))
            rows.append(f"{float(edges[b])!r},{float(edges[b + 1])!r},{int(counts[b])},{group}")
        Path(args.hist).write_text("\n".join(rows) + "\n")
        print(f"wrote distribution histogram to {args.hist}")
    return 0


def cmd_curriculum_preset(args) -> int:
    config = preset(args.name, args.k)
    config.save(args.out)
    print(f"wrote {args.name} preset (k={args.k}) to {args.out}")
    return 0


def cmd_curriculum_show(args) -> int:
    config = CurriculumConfig.load(args.config)
    matrix = trajectory(config, args.steps)
    t_grid = np.linspace(0.0, 1.0, args.steps)
    lines = ["group," + ",".join(repr(float(t)) for t in t_grid)]
    for g in range(config.k):
        lines.append(f"{g}," + ",".join(repr(float(w)) for w in matrix[g]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote trajectory CSV to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    train_ds, dev_ds, test_ds = _load_splits(args.data_dir)
    partition = _partition_for(args, train_ds)
    curriculum = harness.resolve_curriculum(args.curriculum or "", args.k)
    if curriculum is not None and args.non_monotonic:
        curriculum.non_monotonic = True
    kind = args.strategy or ("curriculum" if curriculum is not None else "none")
    strategy = make_strategy(kind, curriculum=curriculum, lam=args.lam,
                             alpha=args.alpha, tau=args.tau)
    from dataclasses import replace

    cfg = replace(_trainer_cfg(args, seed=args.seed), weight_strategy=strategy)
    report = train(train_ds, dev_ds, test_ds, partition, cfg, curriculum)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "report.json")
    report.write_curve_csv(out / "curve.csv")
    report.write_group_weights_csv(out / "group_weights.csv")
    if curriculum is not None and curriculum.non_monotonic:
        report.write_reassignment_csv(out / "reassignments.csv")
    print(f"best_dev_accuracy: {report.best_dev_accuracy:.6f}")
    print(f"test_accuracy: {report.test_accuracy:.6f}")
    print(f"report: {out / 'report.json'}")
    return 0


def cmd_discover(args) -> int:
    train_ds, dev_ds, _ = _load_splits(args.data_dir)
    partition = _partition_for(args, train_ds)
    if args.subsample_per_group:
        train_ds = difficulty_balanced_subsample(
            train_ds, partition, args.subsample_per_group, seed=args.master_seed)
        scores = score_dataset(train_ds, args.difficulty, _trainer_cfg(args, seed=args.prior_seed))
        partition = partition_scores(scores, args.k, scheme=args.scheme, method=args.difficulty)
    seeds = [int(s) for s in args.seeds.split(",")]
    store = search.TrialStore(args.store)
    space = search.SearchSpace(k=args.k)
    runner = search.make_training_runner(
        train_ds, dev_ds, partition, _trainer_cfg(args), seeds, store,
        non_monotonic=args.non_monotonic)
    best, history = search.discover(space, runner, args.budget, store,
                                    master_seed=args.master_seed)
    best.save(args.out)
    complete = [r for r in history if r.status == "complete"]
    print(f"trials: {len(history)} ({len(complete)} complete)")
    print(f"best objective: {max(r.objective for r in complete):.6f}")
    print(f"best curriculum: {args.out}")
    if args.top_summary:
        search.write_top_summary_csv(args.top_summary, history,
                                     min(args.top_n, len(complete)))
        print(f"top-{min(args.top_n, len(complete))} summary: {args.top_summary}")
    return 0


def cmd_sweep_k(args) -> int:
    train_ds, dev_ds, test_ds = _load_splits(args.data_dir)
    ks = [int(k) for k in args.ks.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = harness.sweep_k(train_ds, dev_ds, test_ds, ks, args.difficulty,
                           seeds, _trainer_cfg(args))
    harness.write_sweep_csv(args.out, rows)
    print(f"wrote k sweep to {args.out}")
    return 0


def cmd_transfer(args) -> int:
    curricula = []
    for spec in args.curriculum:
        if spec.startswith("preset:"):
            name = spec.split(":", 1)[1]
            curricula.append((name, preset(name, args.k)))
        else:
            config = CurriculumConfig.load(spec)
            curricula.append((config.name or Path(spec).stem, config))
    targets = []
    from dataclasses import replace

    for spec in args.target:
        parts = spec.split(":")
        if len(parts) < 3:
            raise SystemExit(f"bad --target {spec!r}; expected NAME=DIR:DIFFICULTY:MODEL[:HIDDEN]")
        name_dir, method, model = parts[0], parts[1], parts[2]
        hidden = int(parts[3]) if len(parts) > 3 else 16
        name, _, data_dir = name_dir.partition("=")
        if not data_dir:
            name, data_dir = name_dir, name_dir
        train_ds, dev_ds, test_ds = _load_splits(data_dir)
        cfg = replace(_trainer_cfg(args), model=model, hidden=hidden)
        scores = score_dataset(train_ds, method, _trainer_cfg(args, seed=args.prior_seed))
        partition = partition_scores(scores, args.k, scheme=args.scheme, method=method)
        targets.append(harness.TransferTarget(name, train_ds, dev_ds, test_ds, partition, cfg))
    seeds = [int(s) for s in args.seeds.split(",")]
    row_names, col_names, raw, normalized = harness.transfer_matrix(curricula, targets, seeds)
    harness.write_matrix_csv(args.out, row_names, col_names, normalized)
    harness.write_matrix_csv(Path(args.out).with_suffix(".raw.csv"), row_names, col_names, raw)
    print(f"wrote transfer matrices to {args.out}")
    return 0


def cmd_report(args) -> int:
    path = harness.rebuild_summary(args.run_dir)
    print(f"rebuilt {path}")
    sys.stdout.write(Path(path).read_text())
    return 0


def cmd_experiment(args) -> int:
    result = harness.experiment(args.config)
    print(f"summary: {result['summary_path']}")
    sys.stdout.write(Path(result["summary_path"]).read_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curricula",
                                     description="Curriculum discovery toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_data = sub.add_parser("data", help="synthesize or inspect datasets")
    data_sub = p_data.add_subparsers(dest="data_command", required=True)
    p_synth = data_sub.add_parser("synth", help="generate a synthetic annotated dataset")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--classes", type=int, default=3)
    p_synth.add_argument("--annotators", type=int, default=5)
    p_synth.add_argument("--noise", type=float, default=0.6)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--dim", type=int, default=6)
    p_synth.add_argument("--out-dir", required=True)
    p_synth.set_defaults(func=cmd_data_synth)
    p_inspect = data_sub.add_parser("inspect", help="summarize a dataset file")
    p_inspect.add_argument("path")
    p_inspect.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p_inspect.set_defaults(func=cmd_data_inspect)

    p_diff = sub.add_parser("difficulty", help="score and partition a dataset")
    diff_sub = p_diff.add_subparsers(dest="difficulty_command", required=True)
    p_score = diff_sub.add_parser("score", help="write a (id, psi, group) sidecar")
    p_score.add_argument("--data", required=True)
    p_score.add_argument("--method", default="entropy", choices=["entropy", "loss"])
    p_score.add_argument("--k", type=int, default=3)
    p_score.add_argument("--partition", default="quantile", choices=["quantile", "kmeans"])
    p_score.add_argument("--out", required=True)
    p_score.add_argument("--hist", default="")
    p_score.add_argument("--bins", type=int, default=20)
    p_score.add_argument("--prior-seed", type=int, default=0)
    _add_trainer_args(p_score)
    p_score.set_defaults(func=cmd_difficulty_score)

    p_cur = sub.add_parser("curriculum", help="create and visualize curricula")
    cur_sub = p_cur.add_subparsers(dest="curriculum_command", required=True)
    p_preset = cur_sub.add_parser("preset", help="write a preset curriculum config")
    p_preset.add_argument("--name", required=True, choices=["inc", "anti", "constant"])
    p_preset.add_argument("--k", type=int, default=3)
    p_preset.add_argument("--out", required=True)
    p_preset.set_defaults(func=cmd_curriculum_preset)
    p_show = cur_sub.add_parser("show", help="emit the weight trajectory CSV")
    p_show.add_argument("config")
    p_show.add_argument("--steps", type=int, default=101)
    p_show.add_argument("--out", default="")
    p_show.set_defaults(func=cmd_curriculum_show)

    p_train = sub.add_parser("train", help="run one training job")
    p_train.add_argument("--data-dir", required=True)
    p_train.add_argument("--curriculum", default="", help="JSON path or preset:NAME")
    p_train.add_argument("--difficulty", default="entropy", choices=["entropy", "loss"])
    p_train.add_argument("--scheme", default="quantile", choices=["quantile", "kmeans"])
    p_train.add_argument("--k", type=int, default=3)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--prior-seed", type=int, default=0)
    p_train.add_argument("--strategy", default="",
                         choices=["", "none", "spl", "superloss", "dp", "hardmining", "curriculum"])
    p_train.add_argument("--lambda", dest="lam", type=float, default=1.2)
    p_train.add_argument("--alpha", type=float, default=0.9)
    p_train.add_argument("--tau", type=float, default=None)
    p_train.add_argument("--non-monotonic", action="store_true")
    p_train.add_argument("--out-dir", required=True)
    _add_trainer_args(p_train)
    p_train.set_defaults(func=cmd_train)

    p_disc = sub.add_parser("discover", help="search the curriculum space with TPE")
    p_disc.add_argument("--data-dir", required=True)
    p_disc.add_argument("--difficulty", default="entropy", choices=["entropy", "loss"])
    p_disc.add_argument("--scheme", default="quantile", choices=["quantile", "kmeans"])
    p_disc.add_argument("--k", type=int, default=3)
    p_disc.add_argument("--budget", type=int, default=100)
    p_disc.add_argument("--seeds", default="0,1,2")
    p_disc.add_argument("--store", required=True)
    p_disc.add_argument("--master-seed", type=int, default=0)
    p_disc.add_argument("--prior-seed", type=int, default=0)
    p_disc.add_argument("--non-monotonic", action="store_true")
    p_disc.add_argument("--subsample-per-group", type=int, default=0)
    p_disc.add_argument("--out", default="best_curriculum.json")
    p_disc.add_argument("--top-summary", default="")
    p_disc.add_argument("--top-n", type=int, default=25)
    _add_trainer_args(p_disc)
    p_disc.set_defaults(func=cmd_discover)

    p_sweep = sub.add_parser("sweep-k", help="inc-preset accuracy vs number of groups")
    p_sweep.add_argument("--data-dir", required=True)
    p_sweep.add_argument("--ks", required=True, help="comma separated, e.g. 3,6,12")
    p_sweep.add_argument("--difficulty", default="entropy", choices=["entropy", "loss"])
    p_sweep.add_argument("--seeds", default="0,1,2,3,4")
    p_sweep.add_argument("--out", required=True)
    _add_trainer_args(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep_k)

    p_trans = sub.add_parser("transfer", help="cross-dataset/model transfer matrix")
    p_trans.add_argument("--curriculum", action="append", required=True,
                         help="JSON path or preset:NAME (repeatable)")
    p_trans.add_argument("--target", action="append", required=True,
                         help="NAME=DIR:DIFFICULTY:MODEL[:HIDDEN] (repeatable)")
    p_trans.add_argument("--k", type=int, default=3)
    p_trans.add_argument("--scheme", default="quantile", choices=["quantile", "kmeans"])
    p_trans.add_argument("--seeds", default="0,1,2,3,4")
    p_trans.add_argument("--prior-seed", type=int, default=0)
    p_trans.add_argument("--out", required=True)
    _add_trainer_args(p_trans)
    p_trans.set_defaults(func=cmd_transfer)

    p_rep = sub.add_parser("report", help="rebuild a run summary from stored reports")
    p_rep.add_argument("--run-dir", required=True)
    p_rep.set_defaults(func=cmd_report)

    p_exp = sub.add_parser("experiment", help="run a multi-seed experiment from a config file")
    p_exp.add_argument("config")
    p_exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
