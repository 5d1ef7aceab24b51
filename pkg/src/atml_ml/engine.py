"""Run a test program set and collect a results document."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Sequence

import numpy as np

from . import profile
from .datasets import Dataset, DatasetNotFound, DatasetRegistry, IngestionError, RegistryError
from .document import (
    EnvironmentDescriptor,
    EnvironmentKind,
    NumericLimit,
    PreprocessingStep,
    Status,
    TestCase,
    TestDescription,
    TestKind,
    TestProgramSet,
    TestResultEntry,
    TestResultsDocument,
    UutDescriptor,
    evaluate_limit,
)
from .executors import (
    AttackConfig,
    CvConfig,
    DriftConfig,
    ExecutionError,
    run_adversarial_test,
    run_cross_validation,
    run_drift_test,
)
from .models import ModelRegistry, ModelSpec, NonDifferentiableError

DEFAULT_CV_RESULT = "ValidationScore"
DEFAULT_ROBUSTNESS_RESULT = "RobustnessScore"


class ResolutionError(LookupError):
    """A TestRef or the UUT could not be resolved; nothing was executed."""


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass
class RunContext:
    dataset_registry: DatasetRegistry
    model_registry: ModelRegistry
    uut: UutDescriptor
    station: EnvironmentDescriptor | None = None
    adapter: EnvironmentDescriptor | None = None
    seed: int = 0
    clock: Callable[[], datetime] = field(default=utc_now)
    clip01: bool = False


# -- adapter preprocessing -------------------------------------------------


def _standardize(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population (divisor n)
    out = np.zeros_like(X)
    ok = std > 0
    out[:, ok] = (X[:, ok] - mean[ok]) / std[ok]
    return out


def _minmax(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    return out


def apply_preprocessing(adapter: EnvironmentDescriptor, data: Dataset) -> Dataset:
    """Run the adapter's declared steps in order; constant features map to 0."""
    if adapter.kind is not EnvironmentKind.ADAPTER:
        raise ValueError("preprocessing is declared by a test adapter, not a station")
    X = data.features
    for step in adapter.preprocessing:
        if step is PreprocessingStep.STANDARDIZE:
            X = _standardize(X)
        elif step is PreprocessingStep.MINMAX:
            X = _minmax(X)
    if X is data.features:
        return data
    return data.with_features(X)


# -- diagnostics -----------------------------------------------------------


def emit_failure_diagnostic(test: TestCase, result_name: str, value: float, limit: NumericLimit) -> str:
    if value < limit.low:
        msg = f"{result_name} = {value:.4f} is below the Low limit {limit.low:.4f}"
        if test.kind is TestKind.CROSS_VALIDATION:
            msg = "low cross-validation score: " + msg
    else:
        msg = f"{result_name} = {value:.4f} is above the High limit {limit.high:.4f}"
    return msg


# -- single test -----------------------------------------------------------


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    status: Status
    measured: tuple[tuple[str, float], ...] = ()
    diagnostic: str | None = None


def _resolve(ctx: RunContext, dataset_id: str | None, what: str, preprocess: bool) -> Dataset:
    if dataset_id is None:
        raise ExecutionError(f"test names no '{what}'")
    try:
        data = ctx.dataset_registry.resolve(dataset_id)
    except (DatasetNotFound, IngestionError) as exc:
        raise ExecutionError(str(exc)) from exc
    if preprocess and ctx.adapter is not None:
        data = apply_preprocessing(ctx.adapter, data)
    return data


def _score(test: TestCase, measured: list[tuple[str, float]], limits: list[tuple[str, NumericLimit]]) -> TestOutcome:
    failures = []
    for name, limit in limits:
        value = dict(measured)[name]
        try:
            verdict = evaluate_limit(value, limit)
        except ValueError as exc:
            return TestOutcome(Status.ERROR, tuple(measured), str(exc))
        if verdict is Status.FAILED:
            failures.append(emit_failure_diagnostic(test, name, value, limit))
    if failures:
        return TestOutcome(Status.FAILED, tuple(measured), "; ".join(failures))
    return TestOutcome(Status.PASSED, tuple(measured))


def _run_cv(test: TestCase, spec: ModelSpec, ctx: RunContext, seed: int) -> TestOutcome:
    folds = profile.folds(test)
    if folds is None or folds < 2:
        raise ExecutionError("cross-validation needs an integer 'Folds' of at least 2")
    data = _resolve(ctx, profile.dataset_id(test), profile.DATASET_ID, True)
    score = run_cross_validation(CvConfig(folds, seed, data.id), spec, data)
    names = [r.name for r in test.expected_results] or [DEFAULT_CV_RESULT]
    measured = [(names[0], score)]
    return _score(test, measured, [(names[0], r.limit) for r in test.expected_results])


def _run_adversarial(test: TestCase, spec: ModelSpec, ctx: RunContext, seed: int) -> TestOutcome:
    eps_reqs = profile.epsilon_requirements(test)
    if not eps_reqs:
        raise ExecutionError("adversarial test names no 'Epsilon'")
    results = list(test.expected_results)
    if results and len(results) != len(eps_reqs):
        raise ExecutionError(
            f"{len(eps_reqs)} epsilon requirement(s) but {len(results)} result block(s)"
        )
    data = _resolve(ctx, profile.dataset_id(test), profile.DATASET_ID, True)
    measured, limits = [], []
    for i, req in enumerate(eps_reqs):
        method = profile.attack_method(req)
        if method not in profile.ATTACK_METHODS:
            raise ExecutionError(f"attack {method!r} is not implemented")
        if not profile.is_number(req.value):
            raise ExecutionError(f"{req.name!r} must be a scalar value")
        config = AttackConfig(float(req.value), method, data.id, ctx.clip01)
        score = run_adversarial_test(config, spec, data, seed)
        if results:
            name = results[i].name
            limits.append((name, results[i].limit))
        else:
            name = DEFAULT_ROBUSTNESS_RESULT if len(eps_reqs) == 1 else f"{DEFAULT_ROBUSTNESS_RESULT}[{i + 1}]"
        measured.append((name, score))
    return _score(test, measured, limits)


def _run_drift(test: TestCase, ctx: RunContext) -> TestOutcome:
    try:
        config = DriftConfig(
            dataset_id=profile.dataset_id(test) or "",
            reference_dataset_id=profile.dataset_id(test, profile.REFERENCE_DATASET_ID),
            gaussian=profile.gaussian_reference(test),
            z_threshold=profile.threshold(test, profile.Z_THRESHOLD, profile.DEFAULT_Z_THRESHOLD),
            ks_threshold=profile.threshold(test, profile.KS_THRESHOLD, profile.DEFAULT_KS_THRESHOLD),
        )
    except (profile.ProfileError, ValueError) as exc:
        raise ExecutionError(str(exc)) from exc
    # drift compares raw inputs against a fixed reference; rescaling would hide the shift
    current = _resolve(ctx, profile.dataset_id(test), profile.DATASET_ID, False)
    reference = None
    if config.reference_dataset_id is not None:
        reference = _resolve(ctx, config.reference_dataset_id, profile.REFERENCE_DATASET_ID, False)
    steps = test.sequence or ()
    step_ids = (steps[0].step_id, steps[-1].step_id) if len(steps) >= 2 else ("Step_1", "Step_2")
    outcome = run_drift_test(config, current, reference, step_ids)
    measured = [(f"{s.kind}:{s.feature}", s.value) for s in outcome.per_feature]
    if outcome.drifted:
        return TestOutcome(Status.FAILED, tuple(measured), outcome.diagnostic())
    names = dict(measured)
    limits = []
    for res in test.expected_results:
        if res.name not in names:
            raise ExecutionError(f"no measurement named {res.name!r} for this drift test")
        limits.append((res.name, res.limit))
    return _score(test, measured, limits)


def run_test(test: TestCase, spec: ModelSpec, ctx: RunContext, seed: int) -> TestOutcome:
    """Execute one test; executor problems become an Error outcome, never an exception."""
    try:
        if test.kind is TestKind.CROSS_VALIDATION:
            return _run_cv(test, spec, ctx, seed)
        if test.kind is TestKind.ADVERSARIAL:
            return _run_adversarial(test, spec, ctx, seed)
        if test.kind is TestKind.DRIFT:
            return _run_drift(test, ctx)
        raise ExecutionError(f"no executor for test kind {test.kind.value!r}")
    except NonDifferentiableError:
        return TestOutcome(Status.ERROR, (), "non-differentiable UUT")
    except ExecutionError as exc:
        return TestOutcome(Status.ERROR, (), str(exc))


# -- program set -----------------------------------------------------------


def resolve_refs(tps: TestProgramSet, descriptions: Iterable[TestDescription]) -> list[TestCase]:
    """Map every TestRef to its test, or raise before anything runs."""
    index: dict[str, list[TestCase]] = {}
    for desc in descriptions:
        for test in desc.tests:
            index.setdefault(test.unique_id, []).append(test)
    tests, problems = [], []
    for ref in tps.test_refs:
        found = index.get(ref, [])
        if len(found) != 1:
            problems.append(f"{ref!r} ({'not found' if not found else 'ambiguous'})")
        else:
            tests.append(found[0])
    if problems:
        raise ResolutionError("unresolved test reference(s): " + ", ".join(problems))
    return tests


def uut_overrides(uut: UutDescriptor) -> dict[str, float]:
    """Numeric UUT characteristics that name a hyperparameter."""
    known = ("learning_rate", "epochs", "k")
    return {
        p.name: float(p.value)
        for p in uut.characteristics
        if p.name in known and not isinstance(p.value, str)
    }


def run_tps(
    tps: TestProgramSet, descriptions: Sequence[TestDescription], ctx: RunContext
) -> TestResultsDocument:
    tests = resolve_refs(tps, descriptions)
    try:
        spec = ctx.model_registry.spec(ctx.uut.uut_identifier, uut_overrides(ctx.uut))
    except (RegistryError, ValueError) as exc:
        raise ResolutionError(str(exc)) from exc
    entries = []
    last: datetime | None = None
    for i, test in enumerate(tests):
        outcome = run_test(test, spec, ctx, ctx.seed + i)
        stamp = ctx.clock()
        if last is not None and stamp < last:
            stamp = last
        last = stamp
        entries.append(
            TestResultEntry(test.unique_id, outcome.status, stamp, outcome.measured, outcome.diagnostic)
        )
    return TestResultsDocument(tuple(entries), ctx.station, ctx.adapter)

