"""Difficulty priors (annotation entropy, averaged loss) and k-group partitions."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Dataset


@dataclass
class DifficultyPartition:
    """Assignment of every sample to one of k ordered difficulty groups.

    ``boundaries`` are the k-1 ascending thresholds on the difficulty score
    psi; ``method`` records which scorer produced psi and ``scheme`` how the
    thresholds were chosen.
    """

    method: str
    k: int
    boundaries: list[float]
    group_of: dict[int, int]
    scheme: str = "quantile"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(self.boundaries) != self.k - 1:
            raise ValueError(f"expected {self.k - 1} boundaries, got {len(self.boundaries)}")
        if any(b > a for a, b in zip(self.boundaries[1:], self.boundaries[:-1])):
            raise ValueError("boundaries must be ascending")
        for i, g in self.group_of.items():
            if not 0 <= g < self.k:
                raise ValueError(f"sample {i}: group {g} outside [0, {self.k})")

    def group_members(self) -> dict[int, list[int]]:
        members: dict[int, list[int]] = {c: [] for c in range(self.k)}
        for i in sorted(self.group_of):
            members[self.group_of[i]].append(i)
        return members

    def sizes(self) -> list[int]:
        members = self.group_members()
        return [len(members[c]) for c in range(self.k)]

    def groups_for(self, ids) -> np.ndarray:
        return np.array([self.group_of[i] for i in ids], dtype=int)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "scheme": self.scheme,
            "k": self.k,
            "boundaries": [float(b) for b in self.boundaries],
            "group_of": {str(i): int(g) for i, g in sorted(self.group_of.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DifficultyPartition":
        return cls(
            method=d["method"], k=int(d["k"]),
            boundaries=[float(b) for b in d["boundaries"]],
            group_of={int(i): int(g) for i, g in d["group_of"].items()},
            scheme=d.get("scheme", "quantile"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "DifficultyPartition":
        return cls.from_dict(json.loads(Path(path).read_text()))


def entropy_score(counts) -> float:
    """Normalized Shannon entropy of an annotation-count vector.

    Computes -sum(p_c * ln(p_c)) over classes with nonzero counts, divided by
    ln(C) where C is the vector length, clamped into [0, 1]. Zero iff a
    single class holds every annotation.
    """
    arr = np.asarray(counts, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("counts must be a non-empty vector")
    if (arr < 0).any():
        raise ValueError("counts must be non-negative")
    total = arr.sum()
    if total <= 0:
        raise ValueError("all-zero annotation counts")
    p = arr[arr > 0] / total
    raw = float(-(p * np.log(p)).sum())
    denom = math.log(arr.size)
    if denom == 0.0:
        return 0.0
    return min(1.0, max(0.0, raw / denom))


def entropy_scores(dataset: Dataset) -> dict[int, float]:
    """Annotation-entropy difficulty for every sample in the dataset."""
    scores = {}
    for s in dataset.samples:
        if s.annotation_counts is None:
            raise ValueError(f"sample {s.id} has no annotation counts")
        scores[s.id] = entropy_score(s.annotation_counts)
    return scores


def loss_prior(train: Dataset, trainer_cfg) -> dict[int, float]:
    """Model-induced difficulty: averaged snapshot losses from a uniform run.

    Trains the configured model with uniform weights, records every sample's
    cross-entropy loss at each evaluation boundary (half epochs by default,
    so an E-epoch run yields 2E snapshots), averages the snapshots per sample
    and min-max normalizes the averages into [0, 1].
    """
    from dataclasses import replace as _replace

    from .strategies import UniformWeights
    from .trainer import _fit_arrays

    n_snapshots = round(trainer_cfg.epochs / trainer_cfg.eval_every)
    if n_snapshots < 2:
        raise ValueError("loss prior needs at least 2 snapshots (epochs / eval_every >= 2)")
    cfg = _replace(trainer_cfg, weight_strategy=UniformWeights())
    X = train.feature_matrix()
    y = train.label_vector()
    res = _fit_arrays(
        X, y, np.zeros(len(train), dtype=int), X, y, cfg,
        num_classes=train.num_classes, n_groups=1, snapshot_losses=True,
    )
    avg = res.loss_snapshots.mean(axis=0)
    lo, hi = float(avg.min()), float(avg.max())
    if hi - lo <= 0.0:
        warnings.warn("degenerate loss prior: all averaged losses equal; returning 0.5 for every sample")
        priors = np.full(len(avg), 0.5)
    else:
        priors = (avg - lo) / (hi - lo)
    return {i: float(p) for i, p in zip(train.ids(), priors)}


def score_dataset(dataset: Dataset, method: str, trainer_cfg=None) -> dict[int, float]:
    """Dispatch to the entropy or loss difficulty scorer."""
    if method == "entropy":
        return entropy_scores(dataset)
    if method == "loss":
        if trainer_cfg is None:
            raise ValueError("loss scoring needs a trainer configuration")
        return loss_prior(dataset, trainer_cfg)
    raise ValueError(f"unknown difficulty method {method!r}; expected entropy or loss")


def _assign(boundaries: np.ndarray, values: np.ndarray) -> np.ndarray:
    # values equal to a boundary fall into the lower group
    return np.searchsorted(boundaries, values, side="left")


def partition_quantile(scores: dict[int, float], k: int, method: str = "entropy") -> DifficultyPartition:
    """Partition scores into k groups at the {i/k} nearest-rank quantiles."""
    if k < 2:
        raise ValueError("k must be >= 2")
    ids = sorted(scores)
    if k > len(ids):
        raise ValueError(f"k={k} exceeds number of samples ({len(ids)})")
    values = np.array([float(scores[i]) for i in ids])
    ordered = np.sort(values)
    n = len(ids)
    boundaries = np.array([ordered[math.ceil(n * i / k) - 1] for i in range(1, k)])
    groups = _assign(boundaries, values)
    occupied = len(np.unique(groups))
    if occupied < k:
        warnings.warn(f"only {occupied} of {k} quantile groups are non-empty (tied scores)")
    return DifficultyPartition(
        method=method, k=k, boundaries=[float(b) for b in boundaries],
        group_of={i: int(g) for i, g in zip(ids, groups)}, scheme="quantile",
    )


def _kmeans1d_dp(values: np.ndarray, weights: np.ndarray, k: int) -> list[int]:
    """Optimal weighted 1-D k-means over sorted unique values.

    Dynamic program over cluster count and rightmost point; returns the start
    index of each cluster. Globally minimizes within-cluster sum of squares.
    """
    m = len(values)
    pw = np.concatenate([[0.0], np.cumsum(weights)])
    ps = np.concatenate([[0.0], np.cumsum(weights * values)])
    pq = np.concatenate([[0.0], np.cumsum(weights * values * values)])

    def seg_cost(i, j):
        # cost of one cluster spanning values[i..j]; i may be an array
        w = pw[j + 1] - pw[i]
        s = ps[j + 1] - ps[i]
        q = pq[j + 1] - pq[i]
        return np.maximum(q - s * s / w, 0.0)

    cost = np.full((k, m), np.inf)
    split = np.zeros((k, m), dtype=int)
    cost[0] = seg_cost(0, np.arange(m))
    for c in range(1, k):
        for j in range(c, m):
            starts = np.arange(c, j + 1)
            totals = cost[c - 1][starts - 1] + seg_cost(starts, j)
            best = int(np.argmin(totals))
            cost[c, j] = totals[best]
            split[c, j] = starts[best]

    starts = []
    j = m - 1
    for c in range(k - 1, 0, -1):
        s = int(split[c, j])
        starts.append(s)
        j = s - 1
    starts.append(0)
    return starts[::-1]


def partition_kmeans1d(scores: dict[int, float], k: int, seed: int = 0,
                       method: str = "entropy") -> DifficultyPartition:
    """Exact 1-D k-means partition (optimal within-cluster sum of squares).

    The dynamic program is deterministic; ``seed`` is accepted for interface
    parity and unused. If there are fewer distinct scores than k, clusters
    collapse to the number of distinct values with a warning.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    ids = sorted(scores)
    if k > len(ids):
        raise ValueError(f"k={k} exceeds number of samples ({len(ids)})")
    values = np.array([float(scores[i]) for i in ids])
    uniq, counts = np.unique(values, return_counts=True)
    eff_k = min(k, uniq.size)
    if eff_k < k:
        warnings.warn(f"only {uniq.size} distinct scores; collapsing to {eff_k} clusters")
    starts = _kmeans1d_dp(uniq, counts.astype(float), eff_k)
    ends = [s - 1 for s in starts[1:]] + [uniq.size - 1]
    boundaries = np.array([(uniq[ends[c]] + uniq[starts[c + 1]]) / 2.0 for c in range(eff_k - 1)])
    groups = _assign(boundaries, values)
    return DifficultyPartition(
        method=method, k=eff_k, boundaries=[float(b) for b in boundaries],
        group_of={i: int(g) for i, g in zip(ids, groups)}, scheme="kmeans",
    )


def partition_scores(scores: dict[int, float], k: int, scheme: str = "quantile",
                     seed: int = 0, method: str = "entropy") -> DifficultyPartition:
    if scheme == "quantile":
        return partition_quantile(scores, k, method=method)
    if scheme == "kmeans":
        return partition_kmeans1d(scores, k, seed=seed, method=method)
    raise ValueError(f"unknown partition scheme {scheme!r}; expected quantile or kmeans")


def wcss(partition: DifficultyPartition, scores: dict[int, float]) -> float:
    """Within-cluster sum of squares of a partition under the given scores."""
    total = 0.0
    for ids in partition.group_members().values():
        if not ids:
            continue
        vals = np.array([scores[i] for i in ids])
        total += float(((vals - vals.mean()) ** 2).sum())
    return total


class DifficultyPartitioner(TransformerMixin, BaseEstimator):
    """Bin 1-D difficulty scores into k ordered groups.

    scheme="quantile" uses nearest-rank quantile thresholds; scheme="kmeans"
    uses the exact dynamic-programming 1-D k-means. Transform returns ordinal
    group indices as an (n, 1) integer array, so the partitioner composes
    with standard pipelines.
    """

    def __init__(self, k: int = 3, scheme: str = "quantile", random_state: int = 0):
        self.k = k
        self.scheme = scheme
        self.random_state = random_state

    def _scores(self, X) -> np.ndarray:
        arr = check_array(X, ensure_2d=False, dtype=float)
        if arr.ndim == 2:
            if arr.shape[1] != 1:
                raise ValueError("expected a single column of difficulty scores")
            arr = arr[:, 0]
        return arr

    def fit(self, X, y=None):
        values = self._scores(X)
        part = partition_scores({i: v for i, v in enumerate(values)}, self.k,
                                scheme=self.scheme, seed=self.random_state)
        self.boundaries_ = np.asarray(part.boundaries, dtype=float)
        self.k_ = part.k
        self.n_features_in_ = 1
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "boundaries_")
        values = self._scores(X)
        return _assign(self.boundaries_, values).reshape(-1, 1)

    def group_labels(self, X) -> np.ndarray:
        """Flat group indices, one per score."""
        return self.transform(X)[:, 0]
