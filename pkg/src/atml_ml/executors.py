"""The three ML test procedures: cross-validation, FGSM robustness and drift.

Every executor is a pure function of its inputs; randomness comes only from
``numpy.random.default_rng(seed)`` so a fixed seed gives bit-identical scores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .datasets import Dataset
from .models import ModelSpec, TrainedModel, TrainingError, train


class ExecutionError(RuntimeError):
    """The test could not produce a measurement; the test status becomes Error."""


@dataclass(frozen=True)
class CvConfig:
    folds: int
    seed: int
    dataset_id: str = ""

    def __post_init__(self) -> None:
        if isinstance(self.folds, bool) or not isinstance(self.folds, int) or self.folds < 2:
            raise ValueError(f"folds must be an integer >= 2, got {self.folds!r}")


class AttackMethod(str, Enum):
    FGSM = "FGSM"


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float
    method: AttackMethod = AttackMethod.FGSM
    dataset_id: str = ""
    clip01: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be finite and non-negative, got {self.epsilon!r}")
        object.__setattr__(self, "method", AttackMethod(self.method))


@dataclass(frozen=True)
class DriftConfig:
    """``gaussian`` maps feature name (or ``"*"`` for all) to ``(mean, variance)``."""

    dataset_id: str = ""
    reference_dataset_id: str | None = None
    gaussian: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    z_threshold: float = 3.0
    ks_threshold: float = 0.2

    def __post_init__(self) -> None:
        for name in ("z_threshold", "ks_threshold"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        for feature, (_, var) in self.gaussian.items():
            if not (math.isfinite(var) and var > 0):
                raise ValueError(f"reference variance for {feature} must be positive")


# -- cross-validation ------------------------------------------------------


def fold_sizes(n: int, k: int) -> list[int]:
    """Sizes of ``k`` contiguous folds; the first ``n mod k`` get one extra row."""
    base, extra = divmod(n, k)
    return [base + 1 if i < extra else base for i in range(k)]


def cv_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    if k > n:
        raise ExecutionError(f"{k} folds requested but the dataset has only {n} rows")
    order = np.random.default_rng(seed).permutation(n)
    bounds = np.cumsum([0] + fold_sizes(n, k))
    return [order[bounds[i] : bounds[i + 1]] for i in range(k)]


def accuracy(model: TrainedModel, features: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(model.predict_many(features) == labels))


def run_cross_validation(config: CvConfig, spec: ModelSpec, data: Dataset) -> float:
    """Mean validation accuracy over ``config.folds`` seeded folds."""
    folds = cv_folds(data.n_rows, config.folds, config.seed)
    scores = []
    for i, val_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        try:
            model = train(spec, data.features[train_idx], data.labels[train_idx])
        except TrainingError as exc:
            raise ExecutionError(f"fold {i + 1}: {exc}") from exc
        scores.append(accuracy(model, data.features[val_idx], data.labels[val_idx]))
    return float(np.mean(scores))


# -- adversarial robustness ------------------------------------------------


def fgsm_perturb(model: TrainedModel, x, y, epsilon: float, clip01: bool = False) -> np.ndarray:
    """``x + epsilon * sign(grad_x loss)`` with ``sign(0) = 0``."""
    x = np.asarray(x, dtype=float)
    x_adv = x + epsilon * np.sign(model.input_gradient(x, y))
    if clip01:
        x_adv = np.clip(x_adv, 0.0, 1.0)
    return x_adv


def holdout_split(n: int, seed: int, train_fraction: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    cut = int(round(train_fraction * n))
    return order[:cut], order[cut:]


def run_adversarial_test(config: AttackConfig, spec: ModelSpec, data: Dataset, seed: int) -> float:
    """Share of perturbed hold-out rows the model still labels correctly.

    Rows the clean model already gets wrong stay in the denominator.
    """
    if data.n_rows < 5:
        raise ExecutionError(f"adversarial test needs at least 5 rows, got {data.n_rows}")
    train_idx, eval_idx = holdout_split(data.n_rows, seed)
    try:
        model = train(spec, data.features[train_idx], data.labels[train_idx])
    except TrainingError as exc:
        raise ExecutionError(str(exc)) from exc
    correct = 0
    for i in eval_idx:
        x_adv = fgsm_perturb(model, data.features[i], data.labels[i], config.epsilon, config.clip01)
        correct += int(model.predict(x_adv) == data.labels[i])
    return correct / len(eval_idx)


# -- drift -----------------------------------------------------------------


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance between empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / a.size
    cdf_b = np.searchsorted(b, points, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def z_statistic(values, mean: float, variance: float) -> float:
    values = np.asarray(values, dtype=float)
    if not variance > 0:
        raise ValueError("reference variance must be positive")
    return float((values.mean() - mean) / math.sqrt(variance / values.size))


@dataclass(frozen=True)
class FeatureStatistic:
    feature: str
    kind: str  # "z" or "ks"
    value: float


def _gaussian_for(config: DriftConfig, feature: str) -> tuple[float, float]:
    if feature in config.gaussian:
        return config.gaussian[feature]
    if "*" in config.gaussian:
        return config.gaussian["*"]
    raise ExecutionError(f"no reference mean/variance for feature {feature!r}")


def drift_statistics(
    current: Dataset, config: DriftConfig, reference_data: Dataset | None = None
) -> list[FeatureStatistic]:
    """Per-feature KS distance when a reference dataset is given, else z-scores.

    A reference dataset takes precedence over Gaussian parameters.
    """
    if reference_data is not None:
        if reference_data.n_features != current.n_features:
            raise ExecutionError(
                f"feature count mismatch: current {current.n_features}, "
                f"reference {reference_data.n_features}"
            )
        return [
            FeatureStatistic(name, "ks", ks_statistic(current.features[:, j], reference_data.features[:, j]))
            for j, name in enumerate(current.feature_names)
        ]
    if not config.gaussian:
        raise ExecutionError("drift test has neither a reference dataset nor a reference Gaussian")
    out = []
    for j, name in enumerate(current.feature_names):
        mean, var = _gaussian_for(config, name)
        out.append(FeatureStatistic(name, "z", z_statistic(current.features[:, j], mean, var)))
    return out


@dataclass(frozen=True)
class StepOutcome:
    step: str
    summary: str


@dataclass(frozen=True)
class DriftOutcome:
    drifted: bool
    per_feature: tuple[FeatureStatistic, ...]
    offending: tuple[FeatureStatistic, ...]
    steps: tuple[StepOutcome, StepOutcome]
    threshold: float

    def diagnostic(self) -> str:
        parts = [
            f"{s.feature} ({'|z|' if s.kind == 'z' else 'D'}={abs(s.value):.4f})" for s in self.offending
        ]
        return f"drift detected (threshold {self.threshold:.4f}) in features: " + ", ".join(parts)


def run_drift_test(
    config: DriftConfig,
    current: Dataset,
    reference_data: Dataset | None = None,
    step_ids: tuple[str, str] = ("Step_1", "Step_2"),
) -> DriftOutcome:
    stats = drift_statistics(current, config, reference_data)
    compare = StepOutcome(
        step_ids[0],
        f"compared {len(stats)} feature(s) against the "
        + ("reference dataset" if reference_data is not None else "reference Gaussian"),
    )
    if reference_data is not None:
        limit = config.ks_threshold
        offending = tuple(s for s in stats if s.value > limit)
    else:
        limit = config.z_threshold
        offending = tuple(s for s in stats if abs(s.value) > limit)
    decide = StepOutcome(
        step_ids[1],
        f"{len(offending)} feature(s) beyond threshold {limit:.4f}",
    )
    return DriftOutcome(bool(offending), tuple(stats), offending, (compare, decide), limit)
