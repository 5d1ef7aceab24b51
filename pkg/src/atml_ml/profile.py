"""Requirement and property names the profile gives meaning to.

These helpers pull typed settings out of a :class:`TestCase`; both the
validator and the run engine go through them so the two never disagree on
what a document says.
"""
from __future__ import annotations

import math

from .document import DatasetRef, TestCase, TestRequirement

DATASET_ID = "Dataset ID"
REFERENCE_DATASET_ID = "Reference Dataset ID"
FOLDS = "Folds"
Z_THRESHOLD = "Z Threshold"
KS_THRESHOLD = "KS Threshold"
CONDITION_TAGS = ("Condition", "Conditions")

DEFAULT_Z_THRESHOLD = 3.0
DEFAULT_KS_THRESHOLD = 0.2
ATTACK_METHODS = ("FGSM",)

# property name prefix for a Gaussian reference; "Mean" alone applies to every feature
MEAN = "mean"
VARIANCE = "variance"
ALL_FEATURES = "*"


class ProfileError(ValueError):
    pass


def dataset_id(test: TestCase, name: str = DATASET_ID) -> str | None:
    req = test.requirement(name)
    if req is None or not isinstance(req.value, DatasetRef) or not req.value.identifier:
        return None
    return req.value.identifier


def is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def folds(test: TestCase) -> int | None:
    req = test.requirement(FOLDS)
    if req is None or not isinstance(req.value, int) or isinstance(req.value, bool):
        return None
    return req.value


def epsilon_requirements(test: TestCase) -> list[TestRequirement]:
    """Requirements naming an attack budget, e.g. ``Epsilon`` or ``FGSM Epsilon``."""
    return [r for r in test.all_requirements() if "epsilon" in r.name.casefold()]


def attack_method(req: TestRequirement) -> str:
    """Attack family named before ``Epsilon``; a bare ``Epsilon`` means FGSM."""
    head = req.name.casefold().split("epsilon", 1)[0].strip(" _-:")
    return head.upper() if head else "FGSM"


def threshold(test: TestCase, name: str, default: float) -> float:
    req = test.requirement(name)
    if req is None:
        return default
    if not is_number(req.value):
        raise ProfileError(f"{name} must be a scalar value")
    value = float(req.value)
    if not (math.isfinite(value) and value > 0):
        raise ProfileError(f"{name} must be a positive finite number, got {value!r}")
    return value


def _split_property_name(name: str) -> tuple[str, str] | None:
    head, sep, feature = name.partition(":")
    head = head.strip().casefold()
    if head not in (MEAN, VARIANCE):
        return None
    feature = feature.strip() if sep else ALL_FEATURES
    if sep and not feature:
        return None
    return head, feature


def gaussian_reference(test: TestCase) -> dict[str, tuple[float, float]]:
    """Collect ``(mean, variance)`` pairs keyed by feature name.

    Properties are named ``Mean``/``Variance`` (applies to every feature) or
    ``Mean:<feature>``/``Variance:<feature>``.  Returns an empty dict when no
    such property exists.  Raises :class:`ProfileError` on an unpaired entry,
    a non-numeric value or a non-positive variance.
    """
    means: dict[str, float] = {}
    variances: dict[str, float] = {}
    for prop in test.all_properties():
        split = _split_property_name(prop.name)
        if split is None:
            continue
        which, feature = split
        if isinstance(prop.value, str):
            raise ProfileError(f"property {prop.name!r} needs a numeric value")
        target = means if which == MEAN else variances
        if feature in target:
            raise ProfileError(f"property {prop.name!r} given more than once")
        target[feature] = float(prop.value)
    unpaired = sorted(set(means) ^ set(variances))
    if unpaired:
        raise ProfileError("unpaired mean/variance for " + ", ".join(unpaired))
    out = {}
    for feature in sorted(means):
        mean, var = means[feature], variances[feature]
        if not math.isfinite(mean):
            raise ProfileError(f"mean for {feature} must be finite")
        if not (math.isfinite(var) and var > 0):
            raise ProfileError(f"variance for {feature} must be positive, got {var!r}")
        out[feature] = (mean, var)
    return out
