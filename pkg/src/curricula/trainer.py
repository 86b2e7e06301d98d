"""Desk-scale softmax classifiers with manual gradients and weighted batches.

Two model families: multinomial logistic regression ("linear") and a
one-hidden-layer tanh network ("mlp"). Training applies a per-sample weight
to each instantaneous loss (no batch renormalization, so a uniform weight c
is exactly equivalent to scaling the SGD learning rate by c), tracks every
sample's latest loss, evaluates the dev split on a fixed cadence, keeps the
best-dev checkpoint, and optionally moves samples between difficulty groups
at every evaluation boundary.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .difficulty import DifficultyPartition
from .dynamics import reassign_groups
from .schedule import CurriculumConfig
from .strategies import CurriculumWeights, UniformWeights, WeightingStrategy

MODELS = ("linear", "mlp")
OPTIMIZERS = ("sgd", "adam")


class TrainingDiverged(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass
class TrainerConfig:
    model: str = "linear"
    hidden: int = 16
    optimizer: str = "adam"
    learning_rate: float = 1e-2
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0
    eval_every: float = 0.5
    init_scale: float = 0.05
    weight_strategy: WeightingStrategy | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.eval_every <= 0:
            raise ValueError("eval_every must be > 0")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")


def init_params(cfg: TrainerConfig, dim: int, num_classes: int, rng) -> dict[str, np.ndarray]:
    """Uniform(-init_scale, init_scale) weights, zero biases."""
    s = cfg.init_scale
    if cfg.model == "linear":
        return {"W": rng.uniform(-s, s, (dim, num_classes)), "b": np.zeros(num_classes)}
    return {
        "W1": rng.uniform(-s, s, (dim, cfg.hidden)),
        "b1": np.zeros(cfg.hidden),
        "W2": rng.uniform(-s, s, (cfg.hidden, num_classes)),
        "b2": np.zeros(num_classes),
    }


def _logits(params: dict[str, np.ndarray], X: np.ndarray):
    if "W1" in params:
        hidden = np.tanh(X @ params["W1"] + params["b1"])
        return hidden @ params["W2"] + params["b2"], hidden
    return X @ params["W"] + params["b"], None


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def batch_forward(params, X, y):
    """Per-sample cross-entropy losses, class probabilities, hidden cache."""
    logits, hidden = _logits(params, X)
    logp = _log_softmax(logits)
    losses = -logp[np.arange(len(y)), y]
    return losses, np.exp(logp), hidden


def forward_loss(params, features, label):
    """Cross-entropy loss and class probabilities for one sample."""
    x = np.asarray(features, dtype=float).reshape(1, -1)
    if not np.isfinite(x).all():
        raise ValueError("non-finite features")
    losses, probs, _ = batch_forward(params, x, np.array([label]))
    return float(losses[0]), probs[0]


def _grads(params, X, y, probs, hidden, weights):
    batch = len(y)
    delta = probs.copy()
    delta[np.arange(batch), y] -= 1.0
    delta *= (weights / batch)[:, None]
    if hidden is None:
        return {"W": X.T @ delta, "b": delta.sum(axis=0)}
    d_hidden = (delta @ params["W2"].T) * (1.0 - hidden * hidden)
    return {
        "W1": X.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
        "W2": hidden.T @ delta,
        "b2": delta.sum(axis=0),
    }


def backward(params, batch, per_sample_weights):
    """Analytic gradient of (1/B) * sum_i w_i * l_i over one batch."""
    X, y = batch
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.asarray(per_sample_weights, dtype=float)
    if w.shape != (len(y),):
        raise ValueError("one weight per sample required")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    _, probs, hidden = batch_forward(params, X, y)
    return _grads(params, X, y, probs, hidden, w)


class _SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for key in params:
            params[key] -= self.lr * grads[key]


class _Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params, grads):
        if self.m is None:
            self.m = {k: np.zeros_like(v) for k, v in params.items()}
            self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t += 1
        for key in params:
            g = grads[key]
            self.m[key] = self.beta1 * self.m[key] + (1 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1 - self.beta2) * g * g
            m_hat = self.m[key] / (1 - self.beta1 ** self.t)
            v_hat = self.v[key] / (1 - self.beta2 ** self.t)
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _make_optimizer(cfg: TrainerConfig):
    if cfg.optimizer == "sgd":
        return _SGD(cfg.learning_rate)
    return _Adam(cfg.learning_rate)


def accuracy(params, X, y) -> float:
    logits, _ = _logits(params, X)
    return float((logits.argmax(axis=1) == y).mean())


@dataclass
class _FitResult:
    best_params: dict
    final_params: dict
    best_dev_accuracy: float
    curve: list
    weight_trajectory: np.ndarray
    group_history: np.ndarray  # (n, n_evals + 1), column 0 = initial groups
    loss_snapshots: np.ndarray | None


def _group_weight_means(last_weight, groups, n_groups):
    col = np.full(n_groups, np.nan)
    for g in range(n_groups):
        vals = last_weight[groups == g]
        vals = vals[~np.isnan(vals)]
        if vals.size:
            col[g] = vals.mean()
    return col


def _resolve_strategy(cfg, curriculum):
    if cfg.weight_strategy is not None:
        return cfg.weight_strategy
    if curriculum is not None:
        return CurriculumWeights(curriculum)
    return UniformWeights()


def _fit_arrays(X, y, groups, X_dev, y_dev, cfg: TrainerConfig, *, num_classes: int,
                n_groups: int, curriculum: CurriculumConfig | None = None,
                samples=None, ids=None, snapshot_losses: bool = False) -> _FitResult:
    """Core training loop over plain arrays.

    Training progress t is completed optimizer steps divided by total planned
    steps. Dev evaluation, checkpointing, optional loss snapshots, and
    optional group reassignment all happen at the same evaluation boundaries.
    """
    n = len(y)
    if not np.isfinite(X).all():
        raise ValueError("non-finite features")
    if groups.shape != (n,):
        raise ValueError("one group index per sample required")
    if groups.max(initial=0) >= n_groups or groups.min(initial=0) < 0:
        raise ValueError(f"group indices must lie in [0, {n_groups})")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg, X.shape[1], num_classes, rng)
    optimizer = _make_optimizer(cfg)
    strategy = _resolve_strategy(cfg, curriculum)
    strategy.start_run(num_classes, samples)
    dynamic = curriculum is not None and curriculum.non_monotonic

    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    n_evals = int(round(cfg.epochs / cfg.eval_every))
    if n_evals < 1:
        raise ValueError("eval_every exceeds the training length")
    eval_steps = [round(j * total_steps / n_evals) for j in range(1, n_evals + 1)]
    if len(set(eval_steps)) != n_evals or eval_steps[0] < 1:
        raise ValueError("evaluation cadence is finer than the optimizer step count")

    groups = groups.copy()
    last_loss, _, _ = batch_forward(params, X, y)
    if not np.isfinite(last_loss).all():
        raise TrainingDiverged("non-finite loss at initialization")
    last_weight = np.full(n, np.nan)
    group_history = [groups.copy()]
    weight_cols = []
    curve = []
    snapshots = [] if snapshot_losses else None
    interval_losses = []
    best_dev = -np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    completed = 0
    eval_idx = 0

    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            t = completed / total_steps
            losses, probs, hidden = batch_forward(params, X[idx], y[idx])
            if not np.isfinite(losses).all():
                raise TrainingDiverged(
                    f"non-finite loss at step {completed} (epoch {epoch}); "
                    "reduce the learning rate")
            last_loss[idx] = losses
            weights = strategy.batch_weights(
                losses, idx if ids is None else ids[idx], groups[idx], t)
            last_weight[idx] = weights
            grads = _grads(params, X[idx], y[idx], probs, hidden, weights)
            optimizer.step(params, grads)
            completed += 1
            interval_losses.append(float(losses.mean()))

            if eval_idx < n_evals and completed == eval_steps[eval_idx]:
                t_eval = completed / total_steps
                dev_acc = accuracy(params, X_dev, y_dev)
                curve.append((t_eval, float(np.mean(interval_losses)), dev_acc))
                interval_losses = []
                weight_cols.append(_group_weight_means(last_weight, groups, n_groups))
                if dev_acc > best_dev:
                    best_dev = dev_acc
                    best_params = {k: v.copy() for k, v in params.items()}
                if snapshot_losses:
                    snap, _, _ = batch_forward(params, X, y)
                    snapshots.append(snap)
                if dynamic:
                    groups = reassign_groups(last_loss, groups, n_groups)
                group_history.append(groups.copy())
                eval_idx += 1

    return _FitResult(
        best_params=best_params,
        final_params=params,
        best_dev_accuracy=best_dev,
        curve=curve,
        weight_trajectory=np.array(weight_cols).T if weight_cols else np.zeros((n_groups, 0)),
        group_history=np.stack(group_history, axis=1),
        loss_snapshots=np.stack(snapshots) if snapshot_losses else None,
    )


@dataclass
class TrainReport:
    """Per-run artifact: accuracies, curves, and the final partition.

    ``sample_ids`` and ``group_history`` are in-memory diagnostics for the
    reassignment log and are not serialized.
    """

    best_dev_accuracy: float
    test_accuracy: float | None
    curve: list[tuple[float, float, float]]
    group_weight_trajectory: np.ndarray
    final_partition: DifficultyPartition | None
    seed: int
    sample_ids: list[int] | None = None
    group_history: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "best_dev_accuracy": self.best_dev_accuracy,
            "test_accuracy": self.test_accuracy,
            "curve": [[t, l, a] for t, l, a in self.curve],
            "group_weight_trajectory": np.asarray(self.group_weight_trajectory).tolist(),
            "final_partition": None if self.final_partition is None else self.final_partition.to_dict(),
            "seed": self.seed,
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "TrainReport":
        d = json.loads(Path(path).read_text())
        return cls(
            best_dev_accuracy=d["best_dev_accuracy"],
            test_accuracy=d["test_accuracy"],
            curve=[tuple(row) for row in d["curve"]],
            group_weight_trajectory=np.array(d["group_weight_trajectory"]),
            final_partition=None if d["final_partition"] is None
            else DifficultyPartition.from_dict(d["final_partition"]),
            seed=d["seed"],
        )

    def write_curve_csv(self, path) -> None:
        lines = ["t,train_loss,dev_accuracy"]
        lines += [f"{t!r},{l!r},{a!r}" for t, l, a in self.curve]
        Path(path).write_text("\n".join(lines) + "\n")

    def write_group_weights_csv(self, path) -> None:
        traj = np.asarray(self.group_weight_trajectory)
        header = "group," + ",".join(f"eval{j}" for j in range(traj.shape[1]))
        lines = [header]
        for g in range(traj.shape[0]):
            lines.append(f"{g}," + ",".join(repr(float(v)) for v in traj[g]))
        Path(path).write_text("\n".join(lines) + "\n")

    def write_reassignment_csv(self, path) -> None:
        if self.sample_ids is None or self.group_history is None:
            raise ValueError("report carries no reassignment history")
        hist = np.asarray(self.group_history)
        header = "id," + ",".join(f"eval{j}" for j in range(hist.shape[1]))
        lines = [header]
        for i, row in zip(self.sample_ids, hist):
            lines.append(f"{i}," + ",".join(str(int(g)) for g in row))
        Path(path).write_text("\n".join(lines) + "\n")


def train(train_ds: Dataset, dev_ds: Dataset, test_ds: Dataset | None,
          partition: DifficultyPartition, cfg: TrainerConfig,
          curriculum: CurriculumConfig | None = None) -> TrainReport:
    """Run one seeded training job and evaluate the best checkpoint.

    The weighting strategy comes from ``cfg.weight_strategy``; when that is
    None, a curriculum strategy over ``curriculum`` is used if given, else
    uniform weights. When ``curriculum.non_monotonic`` is set, samples move
    between adjacent groups at every evaluation boundary based on their most
    recent recorded loss. Test accuracy is computed from the checkpoint with
    the best dev accuracy, never the final parameters.
    """
    ids = np.array(train_ds.ids())
    missing = [i for i in ids if i not in partition.group_of]
    if missing:
        raise ValueError(f"partition missing {len(missing)} train ids (e.g. {missing[0]})")
    groups = partition.groups_for(ids)
    result = _fit_arrays(
        train_ds.feature_matrix(), train_ds.label_vector(), groups,
        dev_ds.feature_matrix(), dev_ds.label_vector(), cfg,
        num_classes=train_ds.num_classes, n_groups=partition.k,
        curriculum=curriculum, samples=train_ds.samples, ids=ids,
    )
    test_acc = None
    if test_ds is not None:
        test_acc = accuracy(result.best_params, test_ds.feature_matrix(), test_ds.label_vector())
    final_partition = replace(
        partition,
        group_of={int(i): int(g) for i, g in zip(ids, result.group_history[:, -1])},
    )
    return TrainReport(
        best_dev_accuracy=result.best_dev_accuracy,
        test_accuracy=test_acc,
        curve=result.curve,
        group_weight_trajectory=result.weight_trajectory,
        final_partition=final_partition,
        seed=cfg.seed,
        sample_ids=[int(i) for i in ids],
        group_history=result.group_history,
    )


class CurriculumClassifier(ClassifierMixin, BaseEstimator):
    """Softmax classifier trained with difficulty-grouped loss weighting.

    Scikit-learn compatible face over the same training loop used by
    :func:`train`: ``fit(X, y, groups=..., eval_set=...)`` checkpoints on the
    eval set (the training data when omitted) and ``predict``/``score`` use
    the best-dev checkpoint.
    """

    def __init__(self, model="linear", hidden=16, optimizer="adam", learning_rate=0.01,
                 batch_size=16, epochs=10, eval_every=0.5, init_scale=0.05,
                 weighting=None, curriculum=None, random_state=0):
        self.model = model
        self.hidden = hidden
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.eval_every = eval_every
        self.init_scale = init_scale
        self.weighting = weighting
        self.curriculum = curriculum
        self.random_state = random_state

    def _config(self) -> TrainerConfig:
        return TrainerConfig(
            model=self.model, hidden=self.hidden, optimizer=self.optimizer,
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            epochs=self.epochs, seed=self.random_state, eval_every=self.eval_every,
            init_scale=self.init_scale, weight_strategy=self.weighting,
        )

    def fit(self, X, y, groups=None, eval_set=None):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        n = len(y_idx)
        if groups is None:
            groups = np.zeros(n, dtype=int)
            n_groups = 1 if self.curriculum is None else self.curriculum.k
        else:
            groups = np.asarray(groups, dtype=int)
            n_groups = self.curriculum.k if self.curriculum is not None else int(groups.max()) + 1
        if eval_set is None:
            X_dev, y_dev = X, y_idx
        else:
            X_dev = check_array(eval_set[0])
            y_dev = np.searchsorted(self.classes_, np.asarray(eval_set[1]))
        result = _fit_arrays(
            X, y_idx, groups, X_dev, y_dev, self._config(),
            num_classes=len(self.classes_), n_groups=n_groups,
            curriculum=self.curriculum,
        )
        self.params_ = result.best_params
        self.final_params_ = result.final_params
        self.n_features_in_ = X.shape[1]
        self.report_ = TrainReport(
            best_dev_accuracy=result.best_dev_accuracy,
            test_accuracy=None,
            curve=result.curve,
            group_weight_trajectory=result.weight_trajectory,
            final_partition=None,
            seed=self.random_state,
            sample_ids=list(range(n)),
            group_history=result.group_history,
        )
        return self

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        logits, _ = _logits(self.params_, X)
        return logits

    def predict_proba(self, X):
        return np.exp(_log_softmax(self.decision_function(X)))

    def predict(self, X):
        logits = self.decision_function(X)
        return self.classes_[logits.argmax(axis=1)]
