"""Curriculum discovery: categorical TPE over per-group (rate, shift) grids.

The sampler models good-trial and bad-trial value densities per dimension
(add-one smoothing over the grid) and proposes the candidate maximizing their
ratio. Trials persist in an append-only JSONL store, so a search resumes
after interruption without re-running completed trial ids.
"""

from __future__ import annotations

import json
import math
import threading
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .schedule import CurriculumConfig, GLFParams, trajectory
from .trainer import TrainerConfig, TrainingDiverged, train

N_STARTUP = 10
GAMMA = 0.25
N_CANDIDATES = 24


def _default_rate_grid() -> tuple[float, ...]:
    return tuple(float(r) for r in range(-10, 11, 2))


def _default_shift_grid() -> tuple[float, ...]:
    return tuple(float(s) for s in np.linspace(-0.5, 1.5, 9))


@dataclass(frozen=True)
class SearchSpace:
    """Discrete (rate, shift) grid repeated once per difficulty group."""

    k: int = 3
    rate_grid: tuple[float, ...] = field(default_factory=_default_rate_grid)
    shift_grid: tuple[float, ...] = field(default_factory=_default_shift_grid)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for grid in (self.rate_grid, self.shift_grid):
            if not grid:
                raise ValueError("grids must be non-empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("grids must be strictly ascending")

    @property
    def n_dims(self) -> int:
        return 2 * self.k

    def grids(self) -> list[np.ndarray]:
        """Per-dimension grids in flat order (rate_0, shift_0, rate_1, ...)."""
        out = []
        for _ in range(self.k):
            out.append(np.array(self.rate_grid))
            out.append(np.array(self.shift_grid))
        return out


@dataclass
class TrialRecord:
    """One search trial: assignment, per-seed outcomes, and mean objective."""

    trial_id: int
    assignment: tuple[tuple[float, float], ...]
    per_seed_dev_acc: list[float]
    objective: float
    status: str = "complete"
    seeds: list[int] = field(default_factory=list)
    started_at: float = 0.0
    finished_at: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "trial_id": self.trial_id,
            "assignment": [[r, s] for r, s in self.assignment],
            "per_seed_dev_acc": self.per_seed_dev_acc,
            "objective": None if not math.isfinite(self.objective) else self.objective,
            "status": self.status,
            "seeds": self.seeds,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        d = json.loads(line)
        objective = d["objective"]
        return cls(
            trial_id=int(d["trial_id"]),
            assignment=tuple((float(r), float(s)) for r, s in d["assignment"]),
            per_seed_dev_acc=[float(a) for a in d["per_seed_dev_acc"]],
            objective=float("-inf") if objective is None else float(objective),
            status=d["status"],
            seeds=[int(s) for s in d.get("seeds", [])],
            started_at=float(d.get("started_at", 0.0)),
            finished_at=float(d.get("finished_at", 0.0)),
        )


class TrialStore:
    """Append-only JSONL store of trial records."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: TrialRecord) -> None:
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(record.to_json() + "\n")
                fh.flush()

    def load(self) -> list[TrialRecord]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(TrialRecord.from_json(line))
                except (KeyError, ValueError, json.JSONDecodeError):
                    warnings.warn(f"{self.path}: skipping corrupt trial record on line {lineno}")
        return records

    def completed_ids(self) -> set[int]:
        return {r.trial_id for r in self.load()}


def _flatten(assignment) -> list[float]:
    return [v for pair in assignment for v in pair]


def _grid_index(grid: np.ndarray, value: float) -> int:
    idx = int(np.argmin(np.abs(grid - value)))
    if not math.isclose(float(grid[idx]), value, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"value {value} is not on the grid")
    return idx


def parzen_densities(history: list[TrialRecord], space: SearchSpace, gamma: float = GAMMA):
    """Good/bad categorical densities per dimension with add-one smoothing.

    The history splits at the gamma quantile of the objective (higher is
    better), capped at 25 good trials so the split tightens as the history
    grows; trials tied with the boundary objective count as good. Because
    the grids are ordinal, each observation also spreads onto its neighbor
    values through a narrow triangular kernel. Each returned density sums to
    1 over its grid.
    """
    complete = [r for r in history if r.status == "complete" and math.isfinite(r.objective)]
    if not complete:
        raise ValueError("no complete trials")
    ordered = sorted(complete, key=lambda r: r.objective, reverse=True)
    n_good = max(1, min(math.ceil(gamma * len(ordered)), 25))
    threshold = ordered[n_good - 1].objective
    good = [r for r in complete if r.objective >= threshold]
    bad = [r for r in complete if r.objective < threshold]

    kernel = np.array([0.15, 0.7, 0.15])
    grids = space.grids()
    density_good, density_bad = [], []
    for dim, grid in enumerate(grids):
        counts_g = np.zeros(len(grid))
        counts_b = np.zeros(len(grid))
        for r in good:
            counts_g[_grid_index(grid, _flatten(r.assignment)[dim])] += 1.0
        for r in bad:
            counts_b[_grid_index(grid, _flatten(r.assignment)[dim])] += 1.0
        counts_g = np.convolve(counts_g, kernel, mode="same")
        counts_b = np.convolve(counts_b, kernel, mode="same")
        density_good.append((counts_g + 1.0) / (counts_g.sum() + len(grid)))
        density_bad.append((counts_b + 1.0) / (counts_b.sum() + len(grid)))
    return density_good, density_bad


def _uniform_point(space: SearchSpace, rng) -> tuple[tuple[float, float], ...]:
    flat = [float(grid[rng.integers(len(grid))]) for grid in space.grids()]
    return tuple((flat[2 * g], flat[2 * g + 1]) for g in range(space.k))


def suggest(history: list[TrialRecord], space: SearchSpace, rng_seed: int,
            *, n_startup: int = N_STARTUP, gamma: float = GAMMA,
            n_candidates: int = N_CANDIDATES) -> tuple[tuple[float, float], ...]:
    """Propose the next assignment.

    Uniform over the grid until ``n_startup`` trials complete; afterwards
    draws ``n_candidates`` points from the good-trial density and returns the
    one maximizing the good/bad likelihood ratio. All randomness derives from
    ``rng_seed``.
    """
    rng = np.random.default_rng(rng_seed)
    complete = [r for r in history if r.status == "complete" and math.isfinite(r.objective)]
    if len(complete) < n_startup:
        return _uniform_point(space, rng)

    density_good, density_bad = parzen_densities(history, space, gamma)
    grids = space.grids()
    choices = np.empty((n_candidates, space.n_dims), dtype=int)
    for dim, grid in enumerate(grids):
        choices[:, dim] = rng.choice(len(grid), size=n_candidates, p=density_good[dim])

    # the candidate pool also holds the incumbent's axis neighbors, so the
    # sampler can polish locally once the densities have concentrated
    incumbent = max(complete, key=lambda r: (r.objective, -r.trial_id))
    inc_idx = [_grid_index(grids[d], v) for d, v in enumerate(_flatten(incumbent.assignment))]
    neighbors = []
    for dim in range(space.n_dims):
        for step in (-1, 1):
            j = inc_idx[dim] + step
            if 0 <= j < len(grids[dim]):
                row = list(inc_idx)
                row[dim] = j
                neighbors.append(row)
    pool = np.vstack([choices, np.array(neighbors, dtype=int)])

    scores = np.zeros(len(pool))
    for dim in range(space.n_dims):
        scores += np.log(density_good[dim][pool[:, dim]])
        scores -= np.log(density_bad[dim][pool[:, dim]])

    def to_assignment(row):
        flat = [float(grids[dim][row[dim]]) for dim in range(space.n_dims)]
        return tuple((flat[2 * g], flat[2 * g + 1]) for g in range(space.k))

    # prefer the best-scoring candidate not already evaluated; re-running a
    # completed assignment only duplicates its deterministic trial record
    seen = {r.assignment for r in history}
    ranked = np.argsort(-scores, kind="stable")
    for idx in ranked:
        assignment = to_assignment(pool[idx])
        if assignment not in seen:
            return assignment
    return to_assignment(pool[ranked[0]])


def assignment_to_config(assignment, non_monotonic: bool = False,
                         name: str = "sp") -> CurriculumConfig:
    return CurriculumConfig(
        k=len(assignment),
        per_group=[GLFParams(float(r), float(s)) for r, s in assignment],
        non_monotonic=non_monotonic,
        name=name,
    )


def run_trial(assignment, train_ds, dev_ds, partition, trainer_cfg: TrainerConfig,
              seeds: list[int], *, trial_id: int = 0, store: TrialStore | None = None,
              non_monotonic: bool = False) -> TrialRecord:
    """Train the assignment once per seed and average best dev accuracies.

    A diverging run marks the whole trial failed with objective -inf. The
    record is appended to the store before returning.
    """
    if not seeds:
        raise ValueError("seeds must be non-empty")
    started = time.time()
    config = assignment_to_config(assignment, non_monotonic=non_monotonic)
    accs: list[float] = []
    status = "complete"
    try:
        for seed in seeds:
            cfg = replace(trainer_cfg, seed=seed, weight_strategy=None)
            report = train(train_ds, dev_ds, None, partition, cfg, config)
            accs.append(report.best_dev_accuracy)
        objective = float(np.mean(accs))
    except TrainingDiverged:
        status = "failed"
        objective = float("-inf")
    record = TrialRecord(
        trial_id=trial_id, assignment=tuple((float(r), float(s)) for r, s in assignment),
        per_seed_dev_acc=accs, objective=objective, status=status,
        seeds=list(seeds), started_at=started, finished_at=time.time(),
    )
    if store is not None:
        store.append(record)
    return record


def make_training_runner(train_ds, dev_ds, partition, trainer_cfg, seeds,
                         store: TrialStore | None, non_monotonic: bool = False):
    def runner(assignment, trial_id):
        return run_trial(assignment, train_ds, dev_ds, partition, trainer_cfg, seeds,
                         trial_id=trial_id, store=store, non_monotonic=non_monotonic)
    return runner


def make_surrogate_runner(objective_fn, store: TrialStore | None):
    """Runner over a deterministic objective, for benchmarking the sampler."""
    def runner(assignment, trial_id):
        started = time.time()
        value = float(objective_fn(assignment))
        record = TrialRecord(
            trial_id=trial_id, assignment=tuple((float(r), float(s)) for r, s in assignment),
            per_seed_dev_acc=[value], objective=value, status="complete",
            seeds=[0], started_at=started, finished_at=time.time(),
        )
        if store is not None:
            store.append(record)
        return record
    return runner


def _trial_seed(master_seed: int, trial_id: int) -> int:
    return int(np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_id,)).generate_state(1)[0])


def discover(space: SearchSpace, runner, budget: int, store: TrialStore,
             master_seed: int = 0, sampler: str = "tpe",
             n_startup: int = N_STARTUP):
    """Run suggest -> trial until ``budget`` trials exist in the store.

    Resumes from the store (completed trial ids are never re-run). Returns
    the best curriculum (argmax objective, ties broken by earliest trial) and
    the full history.
    """
    if budget < n_startup:
        raise ValueError(f"budget must be >= n_startup ({n_startup})")
    if sampler not in ("tpe", "random"):
        raise ValueError(f"unknown sampler {sampler!r}")
    history = store.load()
    while len(history) < budget:
        trial_id = max((r.trial_id for r in history), default=-1) + 1
        seed = _trial_seed(master_seed, trial_id)
        if sampler == "random":
            assignment = _uniform_point(space, np.random.default_rng(seed))
        else:
            assignment = suggest(history, space, seed, n_startup=n_startup)
        history.append(runner(assignment, trial_id))
    complete = [r for r in history if r.status == "complete" and math.isfinite(r.objective)]
    if not complete:
        raise RuntimeError("no trial completed")
    best = max(complete, key=lambda r: (r.objective, -r.trial_id))
    return assignment_to_config(best.assignment, name=f"sp-trial{best.trial_id}"), history


def top_curricula_summary(history: list[TrialRecord], top_n: int, steps: int = 101):
    """Mean weight curves of the top assignments with 95% CI bands.

    Returns (t_grid, mean, lower, upper), each curve array shaped (k, steps).
    """
    complete = [r for r in history if r.status == "complete" and math.isfinite(r.objective)]
    if len(complete) < top_n:
        raise ValueError(f"need {top_n} complete trials, have {len(complete)}")
    ranked = sorted(complete, key=lambda r: (-r.objective, r.trial_id))[:top_n]
    curves = np.stack([trajectory(assignment_to_config(r.assignment), steps) for r in ranked])
    mean = curves.mean(axis=0)
    if top_n > 1:
        half = 1.96 * curves.std(axis=0, ddof=1) / math.sqrt(top_n)
    else:
        half = np.zeros_like(mean)
    t_grid = np.linspace(0.0, 1.0, steps)
    return t_grid, mean, mean - half, mean + half


def write_top_summary_csv(path, history: list[TrialRecord], top_n: int, steps: int = 101) -> None:
    t_grid, mean, lower, upper = top_curricula_summary(history, top_n, steps)
    lines = ["group,t,mean,ci_lower,ci_upper"]
    for g in range(mean.shape[0]):
        for j, t in enumerate(t_grid):
            lines.append(f"{g},{float(t)!r},{float(mean[g, j])!r},"
                         f"{float(lower[g, j])!r},{float(upper[g, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n")
