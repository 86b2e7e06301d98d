"""Annotated datasets: JSONL/CSV loading, synthetic generation, balanced subsampling.

The canonical on-disk format is JSONL with one record per line:

    {"id": int, "x": [float, ...], "y": int, "counts": [int, ...]}

``counts`` (per-class annotation tallies) is optional per record and is kept
absent, never zero-filled, when missing. CSV is supported read-only for
features plus label, with the fixed header ``id,x0,...,x{d-1},y``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_ALLOWED_KEYS = {"id", "x", "y", "counts"}


@dataclass
class AnnotatedSample:
    """One sample with optional per-class annotation counts.

    ``psi`` (difficulty in [0, 1]) and ``group`` stay ``None`` until scoring
    and partitioning have run. ``latent_difficulty`` is set only by the
    synthetic generator and is never serialized.
    """

    id: int
    features: np.ndarray
    gold_label: int
    annotation_counts: np.ndarray | None = None
    psi: float | None = None
    group: int | None = None
    latent_difficulty: float | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 1 or self.features.size == 0:
            raise ValueError(f"sample {self.id}: features must be a non-empty vector")
        if self.annotation_counts is not None:
            counts = np.asarray(self.annotation_counts, dtype=int)
            if counts.ndim != 1 or (counts < 0).any():
                raise ValueError(f"sample {self.id}: counts must be non-negative integers")
            if counts.sum() < 1:
                raise ValueError(f"sample {self.id}: annotation counts must sum to >= 1")
            self.annotation_counts = counts


@dataclass
class Dataset:
    """An ordered collection of samples sharing one label space."""

    samples: list[AnnotatedSample]
    num_classes: int
    split_tag: str = "train"

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.split_tag not in ("train", "dev", "test"):
            raise ValueError(f"split_tag must be train/dev/test, got {self.split_tag!r}")
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids")
        dims = {s.features.size for s in self.samples}
        if len(dims) > 1:
            raise ValueError(f"inconsistent feature dimensionality: {sorted(dims)}")
        for s in self.samples:
            if not 0 <= s.gold_label < self.num_classes:
                raise ValueError(f"sample {s.id}: label {s.gold_label} outside [0, {self.num_classes})")
            if s.annotation_counts is not None and s.annotation_counts.size != self.num_classes:
                raise ValueError(f"sample {s.id}: counts length != num_classes")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        return self.samples[0].features.size if self.samples else 0

    def ids(self) -> list[int]:
        return [s.id for s in self.samples]

    def feature_matrix(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack([s.features for s in self.samples]))

    def label_vector(self) -> np.ndarray:
        return np.array([s.gold_label for s in self.samples], dtype=int)

    @property
    def has_counts(self) -> bool:
        return all(s.annotation_counts is not None for s in self.samples)


def _record(sample: AnnotatedSample) -> dict:
    rec = {
        "id": int(sample.id),
        "x": [float(v) for v in sample.features],
        "y": int(sample.gold_label),
    }
    if sample.annotation_counts is not None:
        rec["counts"] = [int(c) for c in sample.annotation_counts]
    return rec


def to_jsonl(dataset: Dataset) -> str:
    """Serialize in canonical form: fixed key order, compact separators."""
    lines = [json.dumps(_record(s), separators=(",", ":")) for s in dataset.samples]
    return "\n".join(lines) + "\n"


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(to_jsonl(dataset))


def _parse_jsonl(path: Path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ValueError(f"{path}: line {lineno}: record must be an object")
            unknown = set(rec) - _ALLOWED_KEYS
            if unknown:
                raise ValueError(f"{path}: line {lineno}: unexpected keys {sorted(unknown)}")
            for key in ("id", "x", "y"):
                if key not in rec:
                    raise ValueError(f"{path}: line {lineno}: missing required key {key!r}")
            yield lineno, rec


def _parse_csv(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "id" or header[-1] != "y":
            raise ValueError(f"{path}: line 1: expected header id,x0,...,y")
        dim = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rec = {
                    "id": int(row[0]),
                    "x": [float(v) for v in row[1 : 1 + dim]],
                    "y": int(row[-1]),
                }
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
            yield lineno, rec


def load_dataset(path, fmt: str = "jsonl", num_classes: int | None = None,
                 split_tag: str = "train") -> Dataset:
    """Load a dataset, preserving file order.

    ``num_classes`` is taken from the argument when given, otherwise from the
    counts vectors, otherwise inferred as ``max(label) + 1``. Malformed
    records raise ValueError naming the offending line.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "jsonl":
        rows = list(_parse_jsonl(path))
    elif fmt == "csv":
        rows = list(_parse_csv(path))
    else:
        raise ValueError(f"unknown format {fmt!r}; expected jsonl or csv")
    if not rows:
        raise ValueError(f"{path}: no records")

    resolved_c = num_classes
    if resolved_c is None:
        for lineno, rec in rows:
            if "counts" in rec:
                resolved_c = len(rec["counts"])
                break
    if resolved_c is None:
        resolved_c = max(int(rec["y"]) for _, rec in rows) + 1
    if resolved_c < 2:
        raise ValueError(f"{path}: cannot infer >= 2 classes; pass num_classes explicitly")

    samples = []
    dim = None
    for lineno, rec in rows:
        x = rec["x"]
        if not isinstance(x, list) or not x or not all(isinstance(v, (int, float)) for v in x):
            raise ValueError(f"{path}: line {lineno}: 'x' must be a non-empty numeric array")
        if dim is None:
            dim = len(x)
        elif len(x) != dim:
            raise ValueError(f"{path}: line {lineno}: feature dimensionality {len(x)} != {dim}")
        y = rec["y"]
        if not isinstance(y, int) or isinstance(y, bool):
            raise ValueError(f"{path}: line {lineno}: 'y' must be an integer")
        if not 0 <= y < resolved_c:
            raise ValueError(f"{path}: line {lineno}: label {y} outside [0, {resolved_c})")
        counts = rec.get("counts")
        if counts is not None:
            if (not isinstance(counts, list)
                    or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in counts)):
                raise ValueError(f"{path}: line {lineno}: 'counts' must be non-negative integers")
            if len(counts) != resolved_c:
                raise ValueError(f"{path}: line {lineno}: counts length {len(counts)} != {resolved_c} classes")
            if sum(counts) < 1:
                raise ValueError(f"{path}: line {lineno}: counts must sum to >= 1")
        try:
            samples.append(AnnotatedSample(
                id=int(rec["id"]), features=np.array(x, dtype=float), gold_label=y,
                annotation_counts=None if counts is None else np.array(counts, dtype=int),
            ))
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None

    try:
        return Dataset(samples=samples, num_classes=resolved_c, split_tag=split_tag)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _stratified_split(samples: list[AnnotatedSample], labels: np.ndarray, rng):
    """60/20/20 split stratified by gold label; ids sorted within each split."""
    train_idx, dev_idx, test_idx = [], [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 5:
            raise ValueError(f"class {c} has {idx.size} samples; too small to stratify 60/20/20")
        perm = rng.permutation(idx)
        n_train = (idx.size * 6) // 10
        n_dev = (idx.size * 2) // 10
        train_idx.extend(perm[:n_train])
        dev_idx.extend(perm[n_train:n_train + n_dev])
        test_idx.extend(perm[n_train + n_dev:])
    return (
        [samples[i] for i in sorted(train_idx)],
        [samples[i] for i in sorted(dev_idx)],
        [samples[i] for i in sorted(test_idx)],
    )


def synthesize(n: int, num_classes: int, m_annotators: int, noise_hard: float, seed: int,
               *, dim: int = 6, cluster_scale: float = 2.6, feature_noise: float = 0.5,
               outlier_boost: float = 40.0, outlier_power: float = 4.0,
               outlier_tail: float = 0.8, outlier_frac: float = 0.5):
    """Generate a multi-annotator dataset with controllable latent difficulty.

    Each sample draws a latent difficulty delta ~ Uniform[0, 1]. Features come
    from per-class Gaussian clusters whose separation shrinks as delta grows
    (centers scaled by 1 - delta), so harder samples carry less class signal.
    Within the hardest tail (delta > outlier_tail), a coin with probability
    ``outlier_frac`` additionally inflates the noise radius by
    ``1 + outlier_boost * delta**outlier_power``, making part of the tail
    far-flung outliers and the rest in-place ambiguous samples. Each of the
    ``m_annotators`` annotators reports the true class with probability
    ``1 - delta * noise_hard`` and a uniformly random other class otherwise;
    the training gold label is the majority vote (ties break toward the
    lowest class index). Returns stratified (train, dev, test) datasets.
    The same seed reproduces identical output bit-for-bit.
    """
    if n < 30:
        raise ValueError("n must be >= 30")
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if m_annotators < 3:
        raise ValueError("m_annotators must be >= 3")
    if not 0.0 <= noise_hard <= 1.0:
        raise ValueError("noise_hard must lie in [0, 1]")

    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(num_classes, dim))
    centers *= cluster_scale / np.linalg.norm(centers, axis=1, keepdims=True)
    true = rng.permuted(np.arange(n) % num_classes)
    delta = rng.uniform(size=n)
    is_outlier = (delta > outlier_tail) & (rng.random(n) < outlier_frac)
    noise = rng.normal(scale=feature_noise, size=(n, dim))
    spread = np.where(is_outlier, 1.0 + outlier_boost * delta ** outlier_power, 1.0)
    features = centers[true] * (1.0 - delta)[:, None] + noise * spread[:, None]

    flip = rng.random((n, m_annotators)) < (delta * noise_hard)[:, None]
    other = rng.integers(0, num_classes - 1, size=(n, m_annotators))
    other = other + (other >= true[:, None])  # uniform over the wrong classes
    votes = np.where(flip, other, true[:, None])
    counts = np.zeros((n, num_classes), dtype=int)
    np.add.at(counts, (np.arange(n)[:, None], votes), 1)
    gold = counts.argmax(axis=1)  # argmax ties resolve to the lowest class index

    samples = [
        AnnotatedSample(id=i, features=features[i], gold_label=int(gold[i]),
                        annotation_counts=counts[i], latent_difficulty=float(delta[i]))
        for i in range(n)
    ]
    train_s, dev_s, test_s = _stratified_split(samples, gold, rng)
    return (
        Dataset(train_s, num_classes, "train"),
        Dataset(dev_s, num_classes, "dev"),
        Dataset(test_s, num_classes, "test"),
    )


def difficulty_balanced_subsample(dataset: Dataset, partition, per_group: int, seed: int) -> Dataset:
    """Draw exactly ``per_group`` samples uniformly without replacement per group."""
    if per_group < 1:
        raise ValueError("per_group must be >= 1")
    rng = np.random.default_rng(seed)
    by_group: dict[int, list[int]] = {c: [] for c in range(partition.k)}
    for s in dataset.samples:
        if s.id not in partition.group_of:
            raise ValueError(f"sample {s.id} missing from partition")
        by_group[partition.group_of[s.id]].append(s.id)
    chosen: set[int] = set()
    for c in range(partition.k):
        members = sorted(by_group[c])
        if len(members) < per_group:
            raise ValueError(f"group {c} has {len(members)} members; need {per_group}")
        chosen.update(rng.choice(np.array(members), size=per_group, replace=False).tolist())
    subset = [s for s in dataset.samples if s.id in chosen]
    return Dataset(subset, dataset.num_classes, dataset.split_tag)
