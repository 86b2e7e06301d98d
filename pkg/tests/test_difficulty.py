import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from curricula import (
    AnnotatedSample,
    Dataset,
    DifficultyPartitioner,
    TrainerConfig,
    entropy_score,
    loss_prior,
    partition_kmeans1d,
    partition_quantile,
    synthesize,
)
from curricula.difficulty import wcss


def brute_entropy(counts):
    total = sum(counts)
    acc = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            acc -= p * math.log(p)
    denom = math.log(len(counts))
    return 0.0 if denom == 0 else min(1.0, max(0.0, acc / denom))


def test_unanimous_is_zero():
    assert entropy_score([5, 0]) == 0.0


def test_uniform_is_one():
    assert entropy_score([1, 1, 1]) == pytest.approx(1.0, abs=1e-12)


def test_three_two_split():
    raw = -(0.6 * math.log(0.6) + 0.4 * math.log(0.4))
    assert raw == pytest.approx(0.673012, abs=1e-6)
    assert entropy_score([3, 2]) == pytest.approx(0.970951, abs=1e-6)
    assert entropy_score([3, 2]) == pytest.approx(raw / math.log(2), abs=1e-12)


def test_all_zero_counts_raise():
    with pytest.raises(ValueError):
        entropy_score([0, 0, 0])


def test_negative_counts_raise():
    with pytest.raises(ValueError):
        entropy_score([3, -1])


counts_vectors = st.lists(st.integers(0, 40), min_size=1, max_size=8).filter(lambda c: sum(c) >= 1)


@given(counts_vectors)
def test_matches_brute_force(counts):
    assert entropy_score(counts) == pytest.approx(brute_entropy(counts), abs=1e-12)


@given(counts_vectors, st.randoms())
def test_permutation_invariant(counts, rnd):
    shuffled = list(counts)
    rnd.shuffle(shuffled)
    assert entropy_score(shuffled) == pytest.approx(entropy_score(counts), abs=1e-12)


@given(counts_vectors)
def test_bounds_and_zero_iff_single_class(counts):
    value = entropy_score(counts)
    assert 0.0 <= value <= 1.0
    single = sum(1 for c in counts if c > 0) == 1
    assert (value == 0.0) == (single or len(counts) == 1)


def test_quantile_nine_values():
    scores = {i: round(0.1 * (i + 1), 2) for i in range(9)}
    part = partition_quantile(scores, 3)
    members = part.group_members()
    assert sorted(scores[i] for i in members[0]) == [0.1, 0.2, 0.3]
    assert sorted(scores[i] for i in members[1]) == [0.4, 0.5, 0.6]
    assert sorted(scores[i] for i in members[2]) == [0.7, 0.8, 0.9]


def test_quantile_total_tie_warns_and_uses_group_zero():
    scores = {i: 0.5 for i in range(10)}
    with pytest.warns(UserWarning):
        part = partition_quantile(scores, 3)
    assert all(g == 0 for g in part.group_of.values())


def test_quantile_two_point_bisection():
    scores = {0: 0.0, 1: 1.0, 2: 0.0, 3: 1.0}
    part = partition_quantile(scores, 2)
    assert part.group_of == {0: 0, 1: 1, 2: 0, 3: 1}


def test_quantile_monotone_in_score():
    rng = np.random.default_rng(0)
    scores = {i: float(v) for i, v in enumerate(rng.random(200))}
    part = partition_quantile(scores, 5)
    ordered = sorted(scores, key=lambda i: scores[i])
    groups = [part.group_of[i] for i in ordered]
    assert groups == sorted(groups)


def test_quantile_k_exceeds_samples():
    with pytest.raises(ValueError):
        partition_quantile({0: 0.1, 1: 0.2}, 3)


def test_kmeans_two_cluster_example():
    scores = {0: 0.0, 1: 0.01, 2: 0.02, 3: 0.9, 4: 0.91}
    part = partition_kmeans1d(scores, 2)
    assert [part.group_of[i] for i in range(5)] == [0, 0, 0, 1, 1]


def test_kmeans_matches_exhaustive_split_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        values = np.sort(rng.random(12))
        scores = {i: float(v) for i, v in enumerate(values)}
        part = partition_kmeans1d(scores, 2)
        best = min(range(1, 12), key=lambda c: ((values[:c] - values[:c].mean()) ** 2).sum()
                   + ((values[c:] - values[c:].mean()) ** 2).sum())
        oracle_cost = (((values[:best] - values[:best].mean()) ** 2).sum()
                       + ((values[best:] - values[best:].mean()) ** 2).sum())
        assert wcss(part, scores) == pytest.approx(oracle_cost, abs=1e-12)


def test_kmeans_singletons_when_k_equals_distinct():
    scores = {0: 0.1, 1: 0.5, 2: 0.9}
    part = partition_kmeans1d(scores, 3)
    assert sorted(part.group_of.values()) == [0, 1, 2]


def test_kmeans_collapses_with_warning():
    scores = {0: 0.1, 1: 0.1, 2: 0.9}
    with pytest.warns(UserWarning):
        part = partition_kmeans1d(scores, 3)
    assert part.k == 2


def test_kmeans_invariant_to_input_order():
    rng = np.random.default_rng(11)
    values = rng.random(30)
    scores = {i: float(v) for i, v in enumerate(values)}
    part_a = partition_kmeans1d(scores, 4)
    shuffled_ids = rng.permutation(30)
    scores_b = {int(i): scores[int(i)] for i in shuffled_ids}
    part_b = partition_kmeans1d(scores_b, 4)
    assert part_a.group_of == part_b.group_of


def test_kmeans_never_worse_than_quantile():
    rng = np.random.default_rng(4)
    for _ in range(10):
        scores = {i: float(v) for i, v in enumerate(rng.random(60))}
        for k in (2, 3, 5):
            km = partition_kmeans1d(scores, k)
            qt = partition_quantile(scores, k)
            assert wcss(km, scores) <= wcss(qt, scores) + 1e-12


def test_partition_serialization_roundtrip(tmp_path):
    scores = {i: float(v) for i, v in enumerate(np.linspace(0, 1, 20))}
    part = partition_quantile(scores, 4)
    path = tmp_path / "part.json"
    part.save(path)
    loaded = type(part).load(path)
    assert loaded == part


def test_loss_prior_snapshot_count_and_range():
    train, _, _ = synthesize(120, 3, 5, 0.6, seed=2)
    cfg = TrainerConfig(epochs=10, eval_every=0.5, seed=0)
    priors = loss_prior(train, cfg)
    assert set(priors) == set(train.ids())
    values = np.array(list(priors.values()))
    assert values.min() == 0.0 and values.max() == 1.0


def test_loss_prior_uses_twenty_snapshots():
    from curricula.trainer import _fit_arrays
    from curricula.strategies import UniformWeights

    train, _, _ = synthesize(120, 3, 5, 0.6, seed=2)
    cfg = TrainerConfig(epochs=10, eval_every=0.5, seed=0, weight_strategy=UniformWeights())
    X, y = train.feature_matrix(), train.label_vector()
    res = _fit_arrays(X, y, np.zeros(len(train), dtype=int), X, y, cfg,
                      num_classes=3, n_groups=1, snapshot_losses=True)
    assert res.loss_snapshots.shape == (20, len(train))


def test_loss_prior_degenerate_returns_half_with_warning():
    samples = [AnnotatedSample(i, [1.0, -1.0], 0) for i in range(40)]
    ds = Dataset(samples, num_classes=2)
    cfg = TrainerConfig(epochs=2, eval_every=0.5, seed=0)
    with pytest.warns(UserWarning, match="degenerate"):
        priors = loss_prior(ds, cfg)
    assert all(v == 0.5 for v in priors.values())


def test_loss_prior_orders_hard_above_easy():
    train, _, _ = synthesize(600, 3, 5, 0.6, seed=8)
    cfg = TrainerConfig(epochs=4, eval_every=0.5, seed=0)
    priors = loss_prior(train, cfg)
    delta = {s.id: s.latent_difficulty for s in train.samples}
    ids = sorted(priors)
    thirds = np.quantile([delta[i] for i in ids], [1 / 3, 2 / 3])
    easy = [priors[i] for i in ids if delta[i] < thirds[0]]
    hard = [priors[i] for i in ids if delta[i] >= thirds[1]]
    assert np.mean(hard) > np.mean(easy)


def test_loss_prior_needs_two_snapshots():
    train, _, _ = synthesize(60, 3, 5, 0.6, seed=2)
    with pytest.raises(ValueError):
        loss_prior(train, TrainerConfig(epochs=1, eval_every=2.0))


def test_partitioner_estimator_api():
    rng = np.random.default_rng(0)
    x = rng.random(100)
    est = DifficultyPartitioner(k=4, scheme="kmeans")
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()
    groups = est.fit(x).transform(x)
    assert groups.shape == (100, 1)
    assert est.k_ == 4
    assert len(est.boundaries_) == 3
    # monotone in the score
    order = np.argsort(x)
    assert np.all(np.diff(groups[order, 0]) >= 0)


def test_partitioner_matches_partition_quantile():
    rng = np.random.default_rng(5)
    x = rng.random(50)
    est = DifficultyPartitioner(k=3, scheme="quantile").fit(x)
    part = partition_quantile({i: float(v) for i, v in enumerate(x)}, 3)
    assert est.group_labels(x).tolist() == [part.group_of[i] for i in range(50)]


def test_partitioner_requires_fit():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        DifficultyPartitioner().transform([0.1, 0.2])
