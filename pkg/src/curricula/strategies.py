"""Reference sample-weighting strategies behind one per-batch interface.

Covers uniform weighting (No-CL), curriculum schedules, binary self-paced
learning, SuperLoss confidence weighting, difficulty-prediction re-weighting
from annotation disagreement, and hard-example mining.
"""

from __future__ import annotations

import math

import numpy as np

from .data import AnnotatedSample
from .schedule import CurriculumConfig, glf_weight

# Principal-branch Lambert W is defined for x >= -1/e.
BRANCH_POINT = -1.0 / math.e

STRATEGY_KINDS = ("none", "curriculum", "spl", "superloss", "dp", "hardmining")


def lambert_w(x: float, tol: float = 1e-10, max_iter: int = 100) -> float:
    """Principal-branch Lambert W via Newton iteration.

    Solves w * exp(w) = x for w >= -1. Converges to ``tol`` on the update
    size; iterates are kept above the branch point by bisecting toward -1.
    """
    if x < BRANCH_POINT:
        raise ValueError(f"lambert_w needs x >= -1/e, got {x}")
    if x == BRANCH_POINT:
        return -1.0
    if x == 0.0:
        return 0.0
    if x < -0.25:
        w = -1.0 + math.sqrt(2.0 * (1.0 + math.e * x))
    elif x < 2.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(max_iter):
        ew = math.exp(w)
        step = (w * ew - x) / (ew * (w + 1.0))
        w_next = w - step
        if w_next <= -1.0:
            w_next = (w - 1.0) / 2.0
        if abs(w_next - w) <= tol * (1.0 + abs(w_next)):
            return w_next
        w = w_next
    return w


def spl_weight(loss: float, lam: float) -> float:
    """Binary self-paced weight: keep the sample iff its loss is below lam."""
    return 1.0 if loss < lam else 0.0


def superloss_sigma(loss: float, tau: float, lam: float) -> float:
    """Closed-form confidence minimizing (l - tau)*sigma + lam*(ln sigma)^2.

    sigma = exp(-W(beta)) with beta = max((l - tau) / (2*lam), -1/e); the
    clamp caps the confidence at e for very easy samples.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    beta = (loss - tau) / (2.0 * lam)
    if beta < BRANCH_POINT:
        beta = BRANCH_POINT
    return math.exp(-lambert_w(beta))


def dp_weight(d: float, alpha: float, tau: float) -> float:
    """Piecewise-linear difficulty re-weighting with range [1 - alpha, 1]."""
    if tau >= 1.0:
        raise ValueError("tau must be < 1")
    if d <= tau:
        return 1.0
    return 1.0 - alpha * (d - tau) / (1.0 - tau)


def dp_difficulty(sample: AnnotatedSample) -> float:
    """Fraction of annotations disagreeing with the gold label."""
    if sample.annotation_counts is None:
        raise ValueError(f"sample {sample.id} has no annotation counts")
    counts = sample.annotation_counts
    return 1.0 - float(counts[sample.gold_label]) / float(counts.sum())


def hard_mining_weight(loss: float, batch_losses) -> float:
    """Loss relative to the batch maximum; 1 for every sample when all tie."""
    arr = np.asarray(batch_losses, dtype=float)
    if arr.size == 0:
        raise ValueError("batch_losses is empty")
    top = float(arr.max())
    if top == float(arr.min()):
        return 1.0
    return float(loss) / top


class WeightingStrategy:
    """Per-batch sample-weight policy.

    ``start_run`` resets any running state at the beginning of a training
    run; ``batch_weights`` maps the batch's raw losses (plus ids, current
    difficulty groups and training progress t) to non-negative weights.
    """

    kind = "none"

    def start_run(self, num_classes: int, samples: list[AnnotatedSample] | None = None) -> None:
        pass

    def batch_weights(self, losses: np.ndarray, ids: np.ndarray,
                      groups: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError


class UniformWeights(WeightingStrategy):
    """Conventional training: every sample weighs 1."""

    kind = "none"

    def batch_weights(self, losses, ids, groups, t):
        return np.ones(len(losses))


class CurriculumWeights(WeightingStrategy):
    """Generalized-logistic weight of each sample's current difficulty group."""

    kind = "curriculum"

    def __init__(self, config: CurriculumConfig):
        if config is None:
            raise ValueError("curriculum weighting needs a CurriculumConfig")
        self.config = config

    def batch_weights(self, losses, ids, groups, t):
        table = np.array([glf_weight(t, p) for p in self.config.per_group])
        return table[groups]


class SelfPacedWeights(WeightingStrategy):
    """Binary scheme: only samples with loss below lam participate."""

    kind = "spl"

    def __init__(self, lam: float = 1.2):
        if lam <= 0:
            raise ValueError("lam must be > 0")
        self.lam = lam

    def batch_weights(self, losses, ids, groups, t):
        return (losses < self.lam).astype(float)


class SuperLossWeights(WeightingStrategy):
    """Confidence weights from the SuperLoss closed form.

    tau is an exponential moving average of the batch mean loss (decay 0.9)
    initialized at ln(num_classes), the uniform-prediction loss.
    """

    kind = "superloss"

    def __init__(self, lam: float = 1.2, decay: float = 0.9):
        if lam <= 0:
            raise ValueError("lam must be > 0")
        if not 0.0 <= decay < 1.0:
            raise ValueError("decay must lie in [0, 1)")
        self.lam = lam
        self.decay = decay
        self.tau = None

    def start_run(self, num_classes, samples=None):
        self.tau = math.log(num_classes)

    def batch_weights(self, losses, ids, groups, t):
        if self.tau is None:
            raise RuntimeError("start_run was not called")
        weights = np.array([superloss_sigma(float(l), self.tau, self.lam) for l in losses])
        self.tau = self.decay * self.tau + (1.0 - self.decay) * float(np.mean(losses))
        return weights


class DifficultyPredictionWeights(WeightingStrategy):
    """Static per-sample weights from annotation disagreement.

    tau=None resolves to the median difficulty of the training set when the
    run starts.
    """

    kind = "dp"

    def __init__(self, alpha: float = 0.9, tau: float | None = None):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self.alpha = alpha
        self.tau = tau
        self._weights: dict[int, float] | None = None

    def start_run(self, num_classes, samples=None):
        if not samples:
            raise ValueError("difficulty-prediction weighting needs samples with annotation counts")
        difficulties = {s.id: dp_difficulty(s) for s in samples}
        tau = self.tau if self.tau is not None else float(np.median(list(difficulties.values())))
        self.resolved_tau_ = tau
        self._weights = {i: dp_weight(d, self.alpha, tau) for i, d in difficulties.items()}

    def batch_weights(self, losses, ids, groups, t):
        if self._weights is None:
            raise RuntimeError("start_run was not called")
        return np.array([self._weights[int(i)] for i in ids])


class HardExampleMiningWeights(WeightingStrategy):
    """Emphasize hard examples: weight = loss / max loss in the batch."""

    kind = "hardmining"

    def batch_weights(self, losses, ids, groups, t):
        top = float(losses.max())
        if top == float(losses.min()):
            return np.ones(len(losses))
        return losses / top


def make_strategy(kind: str, *, curriculum: CurriculumConfig | None = None,
                  lam: float = 1.2, alpha: float = 0.9, tau: float | None = None,
                  decay: float = 0.9) -> WeightingStrategy:
    """Build a strategy by name with its parameters."""
    if kind == "none":
        return UniformWeights()
    if kind == "curriculum":
        return CurriculumWeights(curriculum)
    if kind == "spl":
        return SelfPacedWeights(lam)
    if kind == "superloss":
        return SuperLossWeights(lam, decay)
    if kind == "dp":
        return DifficultyPredictionWeights(alpha, tau)
    if kind == "hardmining":
        return HardExampleMiningWeights()
    raise ValueError(f"unknown strategy {kind!r}; expected one of {STRATEGY_KINDS}")
