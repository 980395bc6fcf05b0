"""
==========
Evaluation
==========

Scoring for the supervised pipeline: mode aggregation over shots,
accuracy-vs-shots curves, confusion-based metrics and the class-weight
calibration loop.

FPR and FNR of a multi-class problem are macro averages of the
one-vs-rest rates of every class.
"""

import logging as log
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from synprint.core.types import Document
from synprint.fingerprint.mlp import ClassifierModel

#: Definitions written into report metadata.
METRIC_DEFINITIONS: Document = {
    'fpr_fnr': 'macro average of one-vs-rest rates',
    'ties': 'lowest label index',
}


def aggregate_mode(labels: Sequence[int]) -> int:
    """Most frequent label; ties go to the lowest index.

    >>> aggregate_mode([2, 0, 2])
    2
    >>> aggregate_mode([1, 0])
    0
    """
    if len(labels) == 0:
        raise ValueError('cannot aggregate an empty set of labels')
    counts = np.bincount(np.asarray(labels, dtype=np.int64))
    return int(np.argmax(counts))


@dataclass(frozen=True)
class CurveRow:
    n_shots: int
    label: str
    accuracy: float

    def as_row(self) -> Tuple[int, str, float]:
        return self.n_shots, self.label, self.accuracy


CURVE_HEADER = ('n_shots', 'class', 'accuracy')
MEAN_LABEL = 'mean'


def mode_accuracy_curve(
        predicted: np.ndarray,
        truth: np.ndarray,
        vocabulary: Sequence[str],
        shot_grid: Sequence[int],
        trials: int,
        rng: np.random.Generator,
) -> List[CurveRow]:
    """Accuracy of mode-aggregated verdicts over ``n`` sampled shots.

    For every grid point and every class present in ``truth``, ``trials``
    times draw ``n`` of that class's shots without replacement and check
    whether the mode of their predicted labels is the class.

    Raises:
        ValueError: The grid is not ascending, or asks for more shots
            than a class has.
    """
    grid = [int(n) for n in shot_grid]
    if not grid or any(n < 1 for n in grid) or grid != sorted(set(grid)):
        raise ValueError(f'shot grid must be ascending and positive: {grid}')
    classes = sorted(int(c) for c in np.unique(truth))
    pools = {c: np.asarray(predicted)[np.asarray(truth) == c] for c in classes}
    smallest = min(len(pool) for pool in pools.values())
    if grid[-1] > smallest:
        raise ValueError(
            f'{grid[-1]} shots requested but a class has only {smallest}')
    rows: List[CurveRow] = []
    for n in grid:
        accuracies = []
        for c in classes:
            pool = pools[c]
            hits = 0
            for _ in range(trials):
                sample = rng.choice(pool, size=n, replace=False)
                hits += aggregate_mode(sample) == c
            accuracy = hits / trials
            accuracies.append(accuracy)
            rows.append(CurveRow(n, vocabulary[c], accuracy))
        rows.append(CurveRow(n, MEAN_LABEL, float(np.mean(accuracies))))
    return rows


def accuracy_vs_shots(
        model: ClassifierModel,
        features: np.ndarray,
        truth: np.ndarray,
        shot_grid: Sequence[int],
        trials: int,
        rng: np.random.Generator,
) -> List[CurveRow]:
    """:py:func:`mode_accuracy_curve` over the model's per-shot
    predictions for single-shot ``features``."""
    predicted = model.predict(features)
    return mode_accuracy_curve(
        predicted, truth, model.label_spec.vocabulary, shot_grid, trials, rng)


def confusion_matrix(truth: np.ndarray, predicted: np.ndarray, classes: int) -> np.ndarray:
    """``matrix[i, j]`` counts samples of class ``i`` predicted as ``j``."""
    matrix = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(matrix, (np.asarray(truth), np.asarray(predicted)), 1)
    return matrix


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    fpr: float
    fnr: float

    def as_row(self) -> Tuple[float, float, float]:
        return self.accuracy, self.fpr, self.fnr


def _rate(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else math.nan


def table_metrics(
        truth: np.ndarray,
        predicted: np.ndarray,
        classes: int,
        positive: Optional[int] = None,
) -> Metrics:
    """Accuracy with one-vs-rest FPR and FNR.

    With ``positive`` set, the rates are those of that class alone;
    otherwise they are averaged over the classes where they are defined.
    """
    matrix = confusion_matrix(truth, predicted, classes)
    total = matrix.sum()
    if total == 0:
        raise ValueError('no samples to score')
    accuracy = float(np.trace(matrix) / total)
    fprs, fnrs = [], []
    targets = range(classes) if positive is None else (positive,)
    for c in targets:
        tp = matrix[c, c]
        fn = matrix[c].sum() - tp
        fp = matrix[:, c].sum() - tp
        tn = total - tp - fn - fp
        fprs.append(_rate(fp, fp + tn))
        fnrs.append(_rate(fn, fn + tp))
    return Metrics(
        accuracy=accuracy,
        fpr=float(np.nanmean(fprs)) if not np.all(np.isnan(fprs)) else math.nan,
        fnr=float(np.nanmean(fnrs)) if not np.all(np.isnan(fnrs)) else math.nan)


def recalls(truth: np.ndarray, predicted: np.ndarray, classes: int) -> np.ndarray:
    matrix = confusion_matrix(truth, predicted, classes)
    support = matrix.sum(axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(support > 0, np.diag(matrix) / np.maximum(support, 1), np.nan)


def chance_sigma(classes: int, samples: int) -> float:
    """Standard deviation of the accuracy of uniform guessing."""
    p = 1.0 / classes
    return math.sqrt(p * (1 - p) / samples)


Trainer = Callable[[np.ndarray], ClassifierModel]


def calibrate_class_weights(
        trainer: Trainer,
        val_features: np.ndarray,
        val_labels: np.ndarray,
        classes: int,
        max_iterations: int = 5,
        lag: float = 0.10,
        factor: float = 2.0,
) -> Tuple[ClassifierModel, np.ndarray, List[Document]]:
    """Raise the weight of every class whose validation recall lags the
    mean recall by more than ``lag``, retrain, and repeat.

    ``trainer`` maps a class-weight vector to a trained model. At most
    ``max_iterations`` retrains follow the first model, and every model
    is scored on the validation set. Returns the model whose worst class
    lags the mean least (the earlier one on ties), its weights and the
    per-iteration history.
    """
    weights = np.ones(classes)
    history: List[Document] = []
    best: Optional[Tuple[float, ClassifierModel, np.ndarray]] = None
    for iteration in range(max_iterations + 1):
        model = trainer(weights)
        per_class = recalls(val_labels, model.predict(val_features), classes)
        present = per_class[~np.isnan(per_class)]
        mean = float(present.mean()) if present.size else 0.0
        worst = float(mean - present.min()) if present.size else 0.0
        lagging = [
            c for c in range(classes)
            if not np.isnan(per_class[c]) and per_class[c] < mean - lag]
        history.append({
            'iteration': iteration,
            'weights': weights.tolist(),
            'recalls': [None if np.isnan(r) else float(r) for r in per_class],
            'worst_lag': worst,
            'lagging': lagging})
        if best is None or worst < best[0]:
            best = (worst, model, weights)
        if not lagging or iteration == max_iterations:
            break
        log.info(
            'class-weight calibration %d: raising weights of classes %s',
            iteration, lagging)
        weights = weights.copy()
        weights[lagging] *= factor
    assert best is not None
    _, model, weights = best
    if len(history) > 1:
        log.info(
            'class-weight calibration kept weights %s after %d models',
            weights.tolist(), len(history))
    return model, weights, history


def test_table_metrics_on_hand_confusion() -> None:
    # rows are truth, columns are predictions
    truth = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 2])
    predicted = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 0])
    metrics = table_metrics(truth, predicted, 3)
    assert metrics.accuracy == 0.7
    # class 0: fp=1 tn=5 fn=1 tp=3, class 1: fp=1 tn=6 fn=1 tp=2,
    # class 2: fp=1 tn=6 fn=1 tp=2
    expected_fpr = (1 / 6 + 1 / 7 + 1 / 7) / 3
    expected_fnr = (1 / 4 + 1 / 3 + 1 / 3) / 3
    assert abs(metrics.fpr - expected_fpr) < 1e-12
    assert abs(metrics.fnr - expected_fnr) < 1e-12


class _FixedModel:
    """Predicts ``hits[c]`` of the ten validation rows of class ``c``
    correctly and the rest as the other class."""

    def __init__(self, hits: Tuple[int, int]) -> None:
        self.predictions = np.array(
            [0] * hits[0] + [1] * (10 - hits[0])
            + [1] * hits[1] + [0] * (10 - hits[1]))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.predictions


def test_calibration_keeps_the_best_model() -> None:
    labels = np.array([0] * 10 + [1] * 10)
    features = np.zeros((20, 1))
    table = {(1.0, 1.0): (10, 2), (1.0, 2.0): (0, 10), (2.0, 2.0): (9, 9)}
    trained: List[Tuple[float, ...]] = []
    models: List[_FixedModel] = []

    def trainer(weights: np.ndarray) -> Any:
        trained.append(tuple(weights))
        models.append(_FixedModel(table[tuple(weights)]))
        return models[-1]

    # the only retrain overshoots, so the first model stays
    model, weights, history = calibrate_class_weights(
        trainer, features, labels, 2, max_iterations=1)
    assert trained == [(1.0, 1.0), (1.0, 2.0)]
    assert weights.tolist() == [1.0, 1.0]
    assert model is models[0]
    assert history[0]['recalls'] == [1.0, 0.2]
    assert [h['lagging'] for h in history] == [[1], [0]]

    trained.clear()
    models.clear()
    model, weights, history = calibrate_class_weights(
        trainer, features, labels, 2, max_iterations=2)
    assert trained == [(1.0, 1.0), (1.0, 2.0), (2.0, 2.0)]
    assert weights.tolist() == [2.0, 2.0]
    assert model is models[-1]
    assert history[-1]['lagging'] == []
