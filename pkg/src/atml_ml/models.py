"""Desk-scale units under test.

Two classifiers are available: binary logistic regression trained by
full-batch gradient descent (differentiable, so it can be attacked with
FGSM) and k-nearest-neighbours (not differentiable).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from .datasets import RegistryError, read_key_values, read_manifest

DEFAULTS = {"learning_rate": 0.1, "epochs": 500.0, "k": 3.0}


class ModelKind(str, Enum):
    LOGISTIC_REGRESSION = "logistic_regression"
    KNN = "knn"


class TrainingError(ValueError):
    pass


class NonDifferentiableError(TypeError):
    def __init__(self, kind: ModelKind) -> None:
        super().__init__(f"non-differentiable UUT ({kind.value} has no input gradient)")


@dataclass(frozen=True)
class ModelSpec:
    uut_id: str
    kind: ModelKind
    hyperparameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        merged = dict(DEFAULTS)
        merged.update({k: float(v) for k, v in self.hyperparameters.items()})
        if self.kind is ModelKind.LOGISTIC_REGRESSION:
            if not merged["learning_rate"] > 0:
                raise ValueError("learning_rate must be positive")
            _require_count(merged["epochs"], "epochs")
        else:
            _require_count(merged["k"], "k")
        object.__setattr__(self, "hyperparameters", merged)

    @property
    def learning_rate(self) -> float:
        return self.hyperparameters["learning_rate"]

    @property
    def epochs(self) -> int:
        return int(self.hyperparameters["epochs"])

    @property
    def k(self) -> int:
        return int(self.hyperparameters["k"])


def _require_count(value: float, name: str) -> None:
    if not (value >= 1 and float(value).is_integer()):
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


def sigmoid(z):
    """Logistic function, evaluated without overflow for large ``|z|``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def cross_entropy(z, y):
    """Per-sample log loss written in terms of the logit ``z``."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.where(y == 1, np.logaddexp(0.0, -z), np.logaddexp(0.0, z))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    classes: tuple[int, ...]
    weights: np.ndarray | None = None
    bias: float = 0.0
    train_features: np.ndarray | None = None
    train_labels: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        if self.weights is not None:
            return self.weights.shape[0]
        return self.train_features.shape[1]

    def _check_width(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[-1]}")

    def logit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_width(x)
        return x @ self.weights + self.bias

    def predict(self, x) -> int:
        return int(self.predict_many(np.atleast_2d(x))[0])

    def predict_many(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        self._check_width(rows)
        if self.spec.kind is ModelKind.LOGISTIC_REGRESSION:
            return (sigmoid(self.logit(rows)) >= 0.5).astype(np.int64)
        return np.array([self._knn_vote(row) for row in rows], dtype=np.int64)

    def _knn_vote(self, row: np.ndarray) -> int:
        dist = np.sqrt(((self.train_features - row) ** 2).sum(axis=1))
        nearest = np.argsort(dist, kind="stable")[: self.spec.k]
        votes = np.bincount(self.train_labels[nearest])
        # argmax returns the first maximum, so ties go to the smaller label
        return int(np.argmax(votes))

    def loss(self, x, y) -> float:
        return float(cross_entropy(self.logit(x), y))

    def input_gradient(self, x, y) -> np.ndarray:
        """Gradient of the log loss with respect to the input: ``(sigmoid(w.x + b) - y) * w``."""
        if self.spec.kind is not ModelKind.LOGISTIC_REGRESSION:
            raise NonDifferentiableError(self.spec.kind)
        residual = sigmoid(self.logit(x)) - float(y)
        return residual * self.weights


def train(spec: ModelSpec, features, labels) -> TrainedModel:
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise TrainingError("features must be n x d with one label per row")
    if spec.kind is ModelKind.KNN:
        if spec.k > X.shape[0]:
            raise TrainingError(f"k={spec.k} exceeds the {X.shape[0]} training rows")
        classes = tuple(int(c) for c in np.unique(y))
        return TrainedModel(spec, classes, train_features=X.copy(), train_labels=y.copy())

    present = set(np.unique(y).tolist())
    if not present <= {0, 1}:
        raise TrainingError(f"logistic regression needs labels in {{0, 1}}, got {sorted(present)}")
    if present != {0, 1}:
        raise TrainingError("logistic regression needs both classes in the training data")
    n = X.shape[0]
    w = np.zeros(X.shape[1])
    b = 0.0
    yf = y.astype(float)
    lr = spec.learning_rate
    for _ in range(spec.epochs):
        residual = sigmoid(X @ w + b) - yf
        w = w - lr * (X.T @ residual) / n
        b = b - lr * residual.sum() / n
    return TrainedModel(spec, (0, 1), weights=w, bias=float(b))


def predict(model: TrainedModel, x) -> int:
    return model.predict(x)


def input_gradient(model: TrainedModel, x, y) -> np.ndarray:
    return model.input_gradient(x, y)


_KIND_ALIASES = {
    "logistic_regression": ModelKind.LOGISTIC_REGRESSION,
    "logisticregression": ModelKind.LOGISTIC_REGRESSION,
    "knn": ModelKind.KNN,
}


def parse_kind(raw: str) -> ModelKind:
    try:
        return _KIND_ALIASES[raw.strip().casefold()]
    except KeyError:
        raise ValueError(f"unknown model kind {raw!r}") from None


def read_model_spec(path, uut_id: str) -> ModelSpec:
    """Read a ``key=value`` model-spec file with a mandatory ``kind`` line."""
    values = read_key_values(path)
    if "kind" not in values:
        raise RegistryError(f"{path}: missing 'kind' line")
    kind = parse_kind(values.pop("kind"))
    hyper = {}
    for key, raw in values.items():
        try:
            hyper[key] = float(raw)
        except ValueError:
            raise RegistryError(f"{path}: {key} must be numeric, got {raw!r}") from None
    return ModelSpec(uut_id, kind, hyper)


class ModelRegistry:
    """Maps UUT identifiers to model-spec files."""

    def __init__(self, paths: Mapping[str, Path]) -> None:
        self._paths = dict(paths)

    @classmethod
    def from_manifest(cls, path) -> "ModelRegistry":
        return cls(read_manifest(path))

    def __contains__(self, uut_id: str) -> bool:
        return uut_id in self._paths

    def spec(self, uut_id: str, overrides: Mapping[str, float] | None = None) -> ModelSpec:
        try:
            path = self._paths[uut_id]
        except KeyError:
            raise RegistryError(f"UUT {uut_id!r} is not in the model registry") from None
        spec = read_model_spec(path, uut_id)
        if overrides:
            merged = {**spec.hyperparameters, **overrides}
            spec = ModelSpec(uut_id, spec.kind, merged)
        return spec
