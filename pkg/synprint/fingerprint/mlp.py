"""
==========
Classifier
==========

A one-hidden-layer perceptron in numpy: affine, rectifier, affine,
softmax. Training minimizes class-weighted cross-entropy with Adam on
shuffled mini-batches and stops once the training loss stops improving.

All hyperparameters live in :py:attr:`ClassifierModel.defaults` and can
be overridden from a scenario's ``train`` section.
"""

import copy
import logging as log
from typing import Any, Dict, Optional, Tuple

import numpy as np

from synprint.core.types import Document
from synprint.fingerprint.features import LabelSpec
from synprint.library.dict_utils import merge_defaults
from synprint.library.filepath import read_json_file, write_json_file

Parameters = Dict[str, np.ndarray]

PARAMETER_NAMES = ('w1', 'b1', 'w2', 'b2')


def init_parameters(
        input_dim: int,
        hidden: int,
        classes: int,
        rng: np.random.Generator,
) -> Parameters:
    """He-initialized weights and zero biases."""
    return {
        'w1': rng.normal(0.0, np.sqrt(2.0 / input_dim), size=(input_dim, hidden)),
        'b1': np.zeros(hidden),
        'w2': rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden, classes)),
        'b2': np.zeros(classes)}


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def forward(params: Parameters, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Logits and hidden activations."""
    pre = x @ params['w1'] + params['b1']
    hidden = np.maximum(pre, 0.0)
    return hidden @ params['w2'] + params['b2'], hidden


def loss_and_gradients(
        params: Parameters,
        x: np.ndarray,
        y: np.ndarray,
        class_weights: np.ndarray,
) -> Tuple[float, Parameters]:
    """Weighted mean cross-entropy and its gradient.

    Each sample counts with the weight of its true class; the loss is
    normalized by the total weight of the batch.
    """
    logits, hidden = forward(params, x)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(len(y))
    weights = class_weights[y]
    total = weights.sum()
    loss = float(-(weights * log_probs[rows, y]).sum() / total)

    d_logits = np.exp(log_probs)
    d_logits[rows, y] -= 1.0
    d_logits *= (weights / total)[:, np.newaxis]
    d_hidden = d_logits @ params['w2'].T
    d_hidden[hidden <= 0] = 0.0
    grads = {
        'w2': hidden.T @ d_logits,
        'b2': d_logits.sum(axis=0),
        'w1': x.T @ d_hidden,
        'b1': d_hidden.sum(axis=0)}
    return loss, grads


def numerical_gradients(
        params: Parameters,
        x: np.ndarray,
        y: np.ndarray,
        class_weights: np.ndarray,
        step: float = 1e-6,
) -> Parameters:
    """Central finite differences of :py:func:`loss_and_gradients`."""
    grads: Parameters = {}
    for name in PARAMETER_NAMES:
        values = params[name]
        grad = np.zeros_like(values)
        for index in np.ndindex(values.shape):
            original = values[index]
            values[index] = original + step
            plus, _ = loss_and_gradients(params, x, y, class_weights)
            values[index] = original - step
            minus, _ = loss_and_gradients(params, x, y, class_weights)
            values[index] = original
            grad[index] = (plus - minus) / (2 * step)
        grads[name] = grad
    return grads


class ClassifierModel:
    defaults: Dict[str, Any] = {
        'hidden': 128,
        'learning_rate': 1e-3,
        'batch_size': 256,
        'max_epochs': 200,
        'patience': 8,
        'min_delta': 1e-4,
        'beta1': 0.9,
        'beta2': 0.999,
        'epsilon': 1e-8,
    }

    def __init__(
            self,
            label_spec: LabelSpec,
            params: Parameters,
            class_weights: Optional[np.ndarray] = None,
            hyper: Optional[dict] = None,
            final_loss: float = float('nan'),
            epochs: int = 0,
    ) -> None:
        self.label_spec = label_spec
        self.params = {name: np.asarray(params[name], dtype=np.float64)
                       for name in PARAMETER_NAMES}
        self.hyper = merge_defaults(self.defaults, hyper)
        classes = len(label_spec)
        if class_weights is None:
            class_weights = np.ones(classes)
        self.class_weights = np.asarray(class_weights, dtype=np.float64)
        self.final_loss = final_loss
        self.epochs = epochs
        self.validate()

    def validate(self) -> None:
        d, h = self.params['w1'].shape
        classes = len(self.label_spec)
        if self.params['b1'].shape != (h,):
            raise ValueError('b1 must match the hidden width')
        if self.params['w2'].shape != (h, classes):
            raise ValueError(f'w2 must have shape ({h}, {classes})')
        if self.params['b2'].shape != (classes,):
            raise ValueError('b2 must have one entry per class')
        if self.class_weights.shape != (classes,):
            raise ValueError('class weights must have one entry per class')
        if np.any(self.class_weights <= 0):
            raise ValueError('class weights must be positive')
        if d < 1:
            raise ValueError('input dimension must be positive')

    @property
    def input_dim(self) -> int:
        return int(self.params['w1'].shape[0])

    @property
    def hidden(self) -> int:
        return int(self.params['w1'].shape[1])

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise ValueError(
                f'feature dimension {x.shape[1]} does not match the model '
                f'input dimension {self.input_dim}')
        logits, _ = forward(self.params, x)
        return softmax(logits)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Label indices; ``argmax`` resolves ties to the lowest index."""
        return np.argmax(self.probabilities(x), axis=1)

    def to_dict(self) -> Document:
        return {
            'input_dim': self.input_dim,
            'hidden': self.hidden,
            'labels': self.label_spec.to_dict(),
            'params': {name: self.params[name].tolist() for name in PARAMETER_NAMES},
            'class_weights': self.class_weights.tolist(),
            'hyper': copy.deepcopy(self.hyper),
            'final_loss': self.final_loss,
            'epochs': self.epochs}

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'ClassifierModel':
        return cls(
            label_spec=LabelSpec.from_dict(document['labels']),
            params={name: np.array(document['params'][name], dtype=np.float64)
                    for name in PARAMETER_NAMES},
            class_weights=np.array(document['class_weights']),
            hyper=document['hyper'],
            final_loss=float(
                'nan' if document['final_loss'] is None
                else document['final_loss']),
            epochs=int(document['epochs']))


def train(
        features: np.ndarray,
        labels: np.ndarray,
        label_spec: LabelSpec,
        rng: np.random.Generator,
        class_weights: Optional[np.ndarray] = None,
        hyper: Optional[dict] = None,
) -> ClassifierModel:
    """Fit a classifier.

    Raises:
        ValueError: Fewer than two distinct classes in ``labels``, or the
            features and labels disagree in length.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError('features must be a matrix with one row per label')
    if len(np.unique(y)) < 2:
        raise ValueError('training needs at least two classes')
    classes = len(label_spec)
    if y.min() < 0 or y.max() >= classes:
        raise ValueError('label indices fall outside the vocabulary')
    parameters = merge_defaults(ClassifierModel.defaults, hyper)
    weights = (np.ones(classes) if class_weights is None
               else np.asarray(class_weights, dtype=np.float64))
    if np.any(weights <= 0):
        raise ValueError('class weights must be positive')

    params = init_parameters(x.shape[1], int(parameters['hidden']), classes, rng)
    moments = {name: np.zeros_like(value) for name, value in params.items()}
    velocities = {name: np.zeros_like(value) for name, value in params.items()}
    rate = parameters['learning_rate']
    beta1, beta2, eps = parameters['beta1'], parameters['beta2'], parameters['epsilon']
    batch = int(parameters['batch_size'])

    best = np.inf
    stale = 0
    step = 0
    loss = np.inf
    epoch = 0
    for epoch in range(1, int(parameters['max_epochs']) + 1):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch):
            index = order[start:start + batch]
            _, grads = loss_and_gradients(params, x[index], y[index], weights)
            step += 1
            for name in PARAMETER_NAMES:
                moments[name] = beta1 * moments[name] + (1 - beta1) * grads[name]
                velocities[name] = beta2 * velocities[name] + (1 - beta2) * grads[name] ** 2
                m_hat = moments[name] / (1 - beta1 ** step)
                v_hat = velocities[name] / (1 - beta2 ** step)
                params[name] -= rate * m_hat / (np.sqrt(v_hat) + eps)
        loss, _ = loss_and_gradients(params, x, y, weights)
        if loss < best - parameters['min_delta']:
            best = loss
            stale = 0
        else:
            stale += 1
            if stale >= parameters['patience']:
                break
    log.info('trained %d-class model: loss %.4f after %d epochs', classes, loss, epoch)
    return ClassifierModel(
        label_spec=label_spec,
        params=params,
        class_weights=weights,
        hyper=parameters,
        final_loss=float(loss),
        epochs=epoch)


def infer_shot(model: ClassifierModel, feature: np.ndarray) -> Tuple[int, np.ndarray]:
    """Label index and class probabilities for one feature vector.

    Raises:
        ValueError: ``feature`` has the wrong dimension.
    """
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 1:
        raise ValueError('infer_shot takes a single feature vector')
    probs = model.probabilities(feature)[0]
    return int(np.argmax(probs)), probs


def save_model(model: ClassifierModel, path: str) -> None:
    write_json_file(path, model.to_dict())


def load_model(path: str) -> ClassifierModel:
    return ClassifierModel.from_dict(read_json_file(path))
