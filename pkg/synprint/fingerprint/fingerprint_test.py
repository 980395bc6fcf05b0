import itertools
import os
import tempfile
from typing import Iterator, List, Tuple

import numpy as np
import pytest

from synprint.farm.provider import SyndromeRecord
from synprint.fingerprint.evaluation import (
    aggregate_mode,
    chance_sigma,
    mode_accuracy_curve,
    recalls,
    table_metrics,
)
from synprint.fingerprint.features import (
    Aggregation,
    LabelSpec,
    Specificity,
    featurize,
    shuffled_labels,
)
from synprint.fingerprint.mlp import (
    ClassifierModel,
    infer_shot,
    init_parameters,
    load_model,
    loss_and_gradients,
    numerical_gradients,
    save_model,
    train,
)
from synprint.fingerprint.unsupervised import (
    NOISE,
    JobVector,
    PairSample,
    ari,
    dbscan,
    pairwise_distances,
    separation_stat,
    sweep_dbscan,
    time_correlation,
)
from synprint.library.seeding import stream

FAST = {'hidden': 16, 'learning_rate': 0.01, 'batch_size': 64, 'max_epochs': 60}


def labels_of(n: int) -> LabelSpec:
    return LabelSpec(Specificity.BACKEND, tuple(f'b{i}' for i in range(n)))


def record(job: str, syndrome: str, backend: str = 'b0', mapping: str = 'm') -> SyndromeRecord:
    return SyndromeRecord(
        job_id=job, backend_id=backend, mapping_id=mapping, shot=0,
        syndrome=syndrome, timestamp=0.0, epoch=0)


# features

def test_featurize_rejects_mixed_lengths() -> None:
    with pytest.raises(ValueError):
        featurize([record('j', '01'), record('j', '011')], Aggregation(), labels_of(1))
    with pytest.raises(ValueError):
        featurize([], Aggregation(), labels_of(1))


def test_mean_groups_stay_within_jobs() -> None:
    records = [record('a', '1')] * 3 + [record('b', '0', 'b1')] * 5
    features = featurize(records, Aggregation.mean_over(2), labels_of(2))
    assert features.features[:, 0].tolist() == [1.0, 0.0, 0.0]
    assert features.labels.tolist() == [0, 1, 1]
    assert features.jobs == ('a', 'b', 'b')


def test_backend_mapping_labels() -> None:
    records = [record('a', '1', 'b0', 'm1'), record('b', '1', 'b0', 'm0')]
    spec = LabelSpec.from_records(records, Specificity.BACKEND_MAPPING)
    assert spec.vocabulary == ('b0/m0', 'b0/m1')
    assert spec.label_of(records[0]) == 1
    with pytest.raises(ValueError):
        LabelSpec(Specificity.BACKEND, ('x', 'x'))


# classifier

def test_gradients_match_finite_differences() -> None:
    rng = stream(1)
    params = init_parameters(4, 5, 3, rng)
    x = rng.random((7, 4))
    y = rng.integers(0, 3, size=7)
    weights = rng.uniform(0.5, 2.0, size=3)
    _, analytic = loss_and_gradients(params, x, y, weights)
    numeric = numerical_gradients(params, x, y, weights)
    for name in analytic:
        a, n = analytic[name], numeric[name]
        relative = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-8)
        assert relative.max() < 1e-4, name


def separable(n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    y = rng.integers(0, 2, size=n)
    x = rng.integers(0, 2, size=(n, 6)).astype(float)
    x[:, 0] = y
    return x, y


def test_separable_data_is_learned() -> None:
    x, y = separable(600, stream(2))
    model = train(x, y, labels_of(2), stream(3), hyper=FAST)
    assert (model.predict(x) == y).mean() >= 0.99
    assert np.isfinite(model.final_loss)


def test_training_is_seed_deterministic() -> None:
    x, y = separable(200, stream(4))
    first = train(x, y, labels_of(2), stream(5), hyper=FAST)
    second = train(x, y, labels_of(2), stream(5), hyper=FAST)
    for name in first.params:
        assert np.array_equal(first.params[name], second.params[name])


def test_single_class_is_rejected() -> None:
    with pytest.raises(ValueError):
        train(np.zeros((4, 2)), np.zeros(4, dtype=int), labels_of(2), stream(6))


def test_class_weight_shifts_boundary() -> None:
    rng = stream(7)
    y = np.repeat([0, 1], 1000)
    x = (rng.normal(0.0, 1.0, size=2000) + np.where(y, 0.5, -0.5))[:, np.newaxis]
    plain = train(x, y, labels_of(2), stream(8), hyper=FAST)
    weighted = train(
        x, y, labels_of(2), stream(8), class_weights=np.array([1.0, 2.0]), hyper=FAST)
    assert recalls(y, weighted.predict(x), 2)[1] > recalls(y, plain.predict(x), 2)[1]


def test_infer_shot() -> None:
    params = init_parameters(3, 4, 3, stream(9))
    params['w2'][:] = 0.0
    uniform = ClassifierModel(labels_of(3), params)
    label, probs = infer_shot(uniform, np.ones(3))
    assert label == 0
    assert abs(probs.sum() - 1) < 1e-9
    with pytest.raises(ValueError):
        infer_shot(uniform, np.ones(4))


def test_one_hot_model_reproduces_training_labels() -> None:
    x = np.eye(4)
    y = np.arange(4)
    model = train(x, y, labels_of(4), stream(10), hyper={**FAST, 'max_epochs': 400})
    assert [infer_shot(model, row)[0] for row in x] == [0, 1, 2, 3]


def test_model_persistence() -> None:
    x, y = separable(100, stream(11))
    model = train(x, y, labels_of(2), stream(12), hyper=FAST)
    with tempfile.TemporaryDirectory() as out:
        path = os.path.join(out, 'model.json')
        save_model(model, path)
        loaded = load_model(path)
    assert np.array_equal(loaded.predict(x), model.predict(x))
    for name in model.params:
        assert np.array_equal(loaded.params[name], model.params[name])
    assert loaded.label_spec == model.label_spec


def test_shuffled_labels_give_chance_accuracy() -> None:
    rng = stream(13)
    classes, n, width = 5, 4000, 12
    bias = rng.choice([-0.05, 0.05], size=(classes, width))
    y = np.repeat(np.arange(classes), n // classes)
    x = (rng.random((n, width)) < 0.5 + bias[y]).astype(float)
    order = rng.permutation(n)
    train_idx, test_idx = order[:n // 2], order[n // 2:]
    model = train(
        x[train_idx], shuffled_labels(y[train_idx], stream(14)),
        labels_of(classes), stream(15), hyper=FAST)
    accuracy = (model.predict(x[test_idx]) == y[test_idx]).mean()
    assert abs(accuracy - 1 / classes) <= 3 * chance_sigma(classes, len(test_idx))


# evaluation

def test_aggregate_mode() -> None:
    assert aggregate_mode([0, 0, 1]) == 0
    assert aggregate_mode([3, 1]) == 1
    with pytest.raises(ValueError):
        aggregate_mode([])


def test_mode_of_weak_shots_is_reliable() -> None:
    rng = stream(16)
    classes, q, shots, trials = 5, 0.30, 500, 300
    wrong = (1 - q) / (classes - 1)
    probs = [q] + [wrong] * (classes - 1)
    hits = sum(
        aggregate_mode(rng.choice(classes, size=shots, p=probs)) == 0
        for _ in range(trials))
    assert hits / trials >= 0.99


def test_perfect_predictions_give_flat_curve() -> None:
    truth = np.repeat(np.arange(3), 50)
    rows = mode_accuracy_curve(truth, truth, ('a', 'b', 'c'), [1, 5, 25], 20, stream(17))
    assert {row.accuracy for row in rows} == {1.0}
    with pytest.raises(ValueError):
        mode_accuracy_curve(truth, truth, ('a', 'b', 'c'), [5, 1], 20, stream(17))
    with pytest.raises(ValueError):
        mode_accuracy_curve(truth, truth, ('a', 'b', 'c'), [51], 20, stream(17))


def test_random_guess_curve_is_at_chance() -> None:
    rng = stream(18)
    truth = np.repeat(np.arange(5), 4000)
    guesses = rng.integers(0, 5, size=len(truth))
    rows = mode_accuracy_curve(
        guesses, truth, tuple('abcde'), [1], 2000, stream(19))
    mean = [row for row in rows if row.label == 'mean'][0]
    assert abs(mean.accuracy - 0.2) < 0.02


def test_curve_rises_with_shots() -> None:
    rng = stream(20)
    truth = np.repeat(np.arange(5), 2000)
    correct = rng.random(len(truth)) < 0.35
    predicted = np.where(correct, truth, rng.integers(0, 5, size=len(truth)))
    rows = mode_accuracy_curve(
        predicted, truth, tuple('abcde'), [1, 11, 51, 201], 200, stream(21))
    means = [row.accuracy for row in rows if row.label == 'mean']
    for earlier, later in zip(means, means[1:]):
        assert later >= earlier - 0.03
    assert means[-1] >= 0.99


def test_table_metrics_edges() -> None:
    truth = np.array([0, 1, 2, 0])
    assert table_metrics(truth, truth, 3).as_row() == (1.0, 0.0, 0.0)
    metrics = table_metrics(np.array([0, 1]), np.array([1, 0]), 2)
    assert metrics.as_row() == (0.0, 1.0, 1.0)


# unsupervised

def restricted_growth(n: int) -> Iterator[List[int]]:
    """Every set partition of ``n`` points, once."""
    def extend(prefix: List[int], top: int) -> Iterator[List[int]]:
        if len(prefix) == n:
            yield list(prefix)
            return
        for label in range(top + 2):
            yield from extend(prefix + [label], max(top, label))
    if n == 0:
        yield []
    else:
        yield from extend([0], 0)


def pair_counting_ari(a: List[int], b: List[int]) -> float:
    n11 = n10 = n01 = n00 = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        same_a, same_b = a[i] == a[j], b[i] == b[j]
        if same_a and same_b:
            n11 += 1
        elif same_a:
            n10 += 1
        elif same_b:
            n01 += 1
        else:
            n00 += 1
    denominator = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if denominator == 0:
        return 1.0
    return 2 * (n00 * n11 - n01 * n10) / denominator


def test_ari_matches_pair_counting() -> None:
    for n in range(2, 7):
        partitions = list(restricted_growth(n))
        for a in partitions:
            for b in partitions:
                assert abs(ari(a, b) - pair_counting_ari(a, b)) < 1e-12, (a, b)


def test_ari_examples() -> None:
    assert ari([0, 0, 1, 1], [5, 5, 7, 7]) == 1.0
    assert ari([0, 0, 0, 0], [0, 0, 1, 1]) == pair_counting_ari([0, 0, 0, 0], [0, 0, 1, 1])
    rng = stream(22)
    assert abs(ari(rng.integers(0, 5, 1000), rng.integers(0, 5, 1000))) < 0.05
    with pytest.raises(ValueError):
        ari([0, 1], [0])


def cloud(prefix: str, center: float, count: int, spread: float,
          rng: np.random.Generator) -> List[JobVector]:
    return [
        JobVector(f'{prefix}{i:03d}', prefix, float(i),
                  center + rng.normal(0.0, spread, size=3))
        for i in range(count)]


def test_dbscan_separates_clouds() -> None:
    rng = stream(23)
    jobs = cloud('a', 0.1, 10, 0.005, rng) + cloud('b', 0.9, 10, 0.005, rng)
    model = dbscan(jobs, eps=0.1, min_samples=3)
    assert model.clusters == 2
    assert model.noise == 0
    assert ari(model.assignments, [job.backend_id for job in jobs]) == 1.0
    every = dbscan(jobs, eps=5.0, min_samples=3)
    assert every.clusters == 1


def test_dbscan_is_permutation_invariant() -> None:
    rng = stream(24)
    jobs = cloud('a', 0.2, 15, 0.05, rng) + cloud('b', 0.5, 15, 0.05, rng)
    reference = dbscan(jobs, eps=0.08, min_samples=4)
    shuffled = [jobs[i] for i in stream(25).permutation(len(jobs))]
    again = dbscan(shuffled, eps=0.08, min_samples=4)
    assert again.assignment_map() == reference.assignment_map()
    with pytest.raises(ValueError):
        dbscan(jobs, eps=0.0, min_samples=1)


def test_core_points_have_enough_neighbors() -> None:
    rng = stream(26)
    jobs = cloud('a', 0.3, 25, 0.04, rng)
    model = dbscan(jobs, eps=0.06, min_samples=4)
    for index in model.core_indices:
        distances = np.linalg.norm(model.points - model.points[index], axis=1)
        assert (distances <= 0.06).sum() >= 4
    assert all(a == NOISE or a >= 0 for a in model.assignments)


def test_pairwise_distances() -> None:
    jobs = [
        JobVector('a', 'x', 0.0, np.array([0.0, 0.0])),
        JobVector('b', 'x', 5.0, np.array([1.0, 0.0])),
        JobVector('c', 'y', 9.0, np.array([0.0, 0.0]))]
    pairs = pairwise_distances(jobs)
    assert len(pairs) == 3
    assert pairs[0].distance == 1.0 and pairs[0].dt == 5.0
    assert pairs[1].distance == 0.0
    with pytest.raises(ValueError):
        pairwise_distances(jobs[:1])
    with pytest.raises(ValueError):
        pairwise_distances(jobs + [JobVector('d', 'y', 0.0, np.zeros(3))])


def pair_cloud(same: np.ndarray, different: np.ndarray) -> List[PairSample]:
    return (
        [PairSample(0.0, float(d), True) for d in same]
        + [PairSample(0.0, float(d), False) for d in different])


def test_separation_stat() -> None:
    rng = stream(27)
    apart = separation_stat(pair_cloud(rng.uniform(0, 0.1, 200), rng.uniform(0.2, 0.3, 200)))
    assert apart.overlap == 0.0
    assert 0.1 <= apart.threshold <= 0.2
    mixed = separation_stat(pair_cloud(rng.uniform(0, 1, 2000), rng.uniform(0, 1, 2000)))
    assert 0.44 < mixed.overlap <= 0.5
    gaussian = separation_stat(pair_cloud(
        rng.normal(0.1, 0.02, 4000), rng.normal(0.3, 0.02, 4000)))
    assert abs(gaussian.threshold - 0.2) < 0.01
    with pytest.raises(ValueError):
        separation_stat(pair_cloud(np.ones(3), np.array([])))


def test_no_time_trend_without_drift() -> None:
    rng = stream(28)
    jobs = [JobVector(f'j{i:03d}', 'x', float(i), rng.normal(0.5, 0.01, 4))
            for i in range(200)]
    assert abs(time_correlation(pairwise_distances(jobs))) < 0.1


def test_sweep_finds_the_clusters() -> None:
    rng = stream(29)
    jobs = (cloud('a', 0.1, 8, 0.005, rng) + cloud('b', 0.5, 8, 0.005, rng)
            + cloud('c', 0.9, 8, 0.005, rng))
    first = sweep_dbscan(jobs)
    second = sweep_dbscan(list(reversed(jobs)))
    assert first.ari == 1.0
    assert (first.eps, first.min_samples) == (second.eps, second.min_samples)
    assert len(first.rows) == 44
    # every pair separates these clouds, so the middle of the grid wins
    assert (first.eps, first.min_samples) == (0.15, 5)
    normalized = sweep_dbscan(jobs, eps_grid=(0.5, 1.0), normalize=True)
    assert normalized.ari == 1.0
