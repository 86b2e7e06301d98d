"""Non-monotonic curricula: move samples between adjacent difficulty groups."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .difficulty import DifficultyPartition


def reassign_groups(losses: np.ndarray, groups: np.ndarray, k: int) -> np.ndarray:
    """Array form of :func:`reassign` for positional losses/groups."""
    if k < 2:
        raise ValueError("k must be >= 2")
    new = groups.copy()
    for c in range(k):
        mask = groups == c
        if not mask.any():
            continue
        mean = float(losses[mask].mean())
        new[mask & (losses > mean)] = min(c + 1, k - 1)
        new[mask & (losses <= mean)] = max(c - 1, 0)
    return new


def reassign(losses: dict[int, float], partition: DifficultyPartition) -> DifficultyPartition:
    """Promote/demote every sample one group based on loss vs its group mean.

    Per group, members with loss strictly above the group's mean move up one
    group and the rest move down one, both clamped to [0, k-1]. All moves are
    computed against the pre-move snapshot and applied atomically; the sample
    count is conserved and no sample moves more than one group.
    """
    ids = sorted(partition.group_of)
    missing = [i for i in ids if i not in losses]
    if missing:
        raise ValueError(f"losses missing for {len(missing)} sample ids (e.g. {missing[0]})")
    loss_vec = np.array([float(losses[i]) for i in ids])
    group_vec = np.array([partition.group_of[i] for i in ids], dtype=int)
    new = reassign_groups(loss_vec, group_vec, partition.k)
    return replace(partition, group_of={i: int(g) for i, g in zip(ids, new)})


def reassignment_log(history: list[DifficultyPartition]):
    """Per-sample group trajectories across a sequence of partitions.

    Returns (ids, matrix) where matrix[i, t] is the group of ids[i] in
    history[t]. All partitions must share the same id set and k.
    """
    if not history:
        raise ValueError("history is empty")
    ids = sorted(history[0].group_of)
    k = history[0].k
    for t, part in enumerate(history[1:], start=1):
        if part.k != k:
            raise ValueError(f"partition {t} has k={part.k}, expected {k}")
        if sorted(part.group_of) != ids:
            raise ValueError(f"partition {t} covers a different id set")
    matrix = np.array([[part.group_of[i] for part in history] for i in ids], dtype=int)
    return ids, matrix
