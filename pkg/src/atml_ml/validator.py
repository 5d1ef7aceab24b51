"""Profile rules over parsed documents.

``validate`` never raises on a bad document; every finding comes back as a
:class:`Violation`, sorted by element path and then rule id.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from . import profile
from .document import (
    Document,
    EnvironmentDescriptor,
    EnvironmentKind,
    NumericLimit,
    Status,
    TestCase,
    TestDescription,
    TestKind,
    TestProgramSet,
    TestResultsDocument,
    UutDescriptor,
)


class Severity(str, Enum):
    ERROR = "Error"
    WARNING = "Warning"


RULES = {
    "R-DATASET-REF": "cross-validation, adversarial and drift tests carry a 'Dataset ID' requirement",
    "R-FOLDS": "cross-validation carries an integer 'Folds' requirement of at least 2",
    "R-EPSILON": "adversarial tests carry a positive 'Epsilon' per attack",
    "R-ATTACK-PAIRING": "each epsilon block pairs with one robustness result block, in order",
    "R-ATTACK-METHOD": "the attack family named by an epsilon requirement is implemented",
    "R-LIMIT-ORDER": "numeric limits have low <= high",
    "R-DRIFT-STEPS": "drift tests have a sequence of at least 2 steps (compare, then threshold)",
    "R-DRIFT-REF": "drift tests carry a reference dataset or mean/variance property pairs",
    "R-DRIFT-THRESHOLD": "drift thresholds, when given, are positive scalars",
    "R-UID-UNIQUE": "test ids, step ids and TPS references are unique",
    "R-TPS-DANGLING": "every TestRef resolves to exactly one test in the description set",
    "R-TPS-CONDITION": "conditional test execution is not supported",
    "R-RESULT-DIAGNOSTIC": "Failed and Error results carry a diagnostic message",
    "R-UUT-ID": "UUT descriptions carry a nonempty identifier",
    "R-STATION-PREPROCESSING": "only test adapters declare preprocessing",
}


@dataclass(frozen=True, order=True)
class Violation:
    element_path: str
    rule_id: str
    severity: Severity
    message: str

    def __post_init__(self) -> None:
        if self.rule_id not in RULES:
            raise ValueError(f"unknown rule id {self.rule_id!r}")

    def format(self) -> str:
        return f"{self.severity.value} {self.rule_id} {self.element_path}: {self.message}"


def _err(out: list, path: str, rule: str, message: str) -> None:
    out.append(Violation(path, rule, Severity.ERROR, message))


def _check_limit(out: list, path: str, limit: NumericLimit) -> None:
    if limit.low > limit.high:
        _err(out, path, "R-LIMIT-ORDER", f"Low {limit.low!r} exceeds High {limit.high!r}")


def _check_test(out: list, test: TestCase, path: str) -> None:
    for i, req in enumerate(test.requirements, 1):
        if isinstance(req.value, NumericLimit):
            _check_limit(out, f"{path}/TestRequirement[{i}]", req.value)
    for i, res in enumerate(test.expected_results, 1):
        _check_limit(out, f"{path}/NumericLimitTestResult[{i}]", res.limit)
    if test.sequence is not None:
        counts = Counter(step.step_id for step in test.sequence)
        for j, step in enumerate(test.sequence, 1):
            spath = f"{path}/Sequence/TestStep[{j}]"
            if counts[step.step_id] > 1:
                _err(out, spath, "R-UID-UNIQUE", f"duplicate step id {step.step_id!r}")
            for i, req in enumerate(step.requirements, 1):
                if isinstance(req.value, NumericLimit):
                    _check_limit(out, f"{spath}/TestRequirement[{i}]", req.value)

    if test.kind is TestKind.GENERIC:
        return
    if profile.dataset_id(test) is None:
        _err(out, path, "R-DATASET-REF", f"test {test.unique_id!r} names no '{profile.DATASET_ID}'")

    if test.kind is TestKind.CROSS_VALIDATION:
        folds = profile.folds(test)
        if folds is None:
            _err(out, path, "R-FOLDS", "missing integer 'Folds' requirement")
        elif folds < 2:
            _err(out, path, "R-FOLDS", f"Folds must be at least 2, got {folds}")

    elif test.kind is TestKind.ADVERSARIAL:
        eps_reqs = profile.epsilon_requirements(test)
        if not eps_reqs:
            _err(out, path, "R-EPSILON", "no 'Epsilon' requirement")
        for req in eps_reqs:
            value = req.value
            if not profile.is_number(value) or not (0 < float(value) < float("inf")):
                _err(out, path, "R-EPSILON", f"{req.name!r} must be a positive finite scalar")
            method = profile.attack_method(req)
            if method not in profile.ATTACK_METHODS:
                _err(out, path, "R-ATTACK-METHOD", f"attack {method!r} is not implemented")
        if eps_reqs and len(eps_reqs) != len(test.expected_results):
            _err(
                out,
                path,
                "R-ATTACK-PAIRING",
                f"{len(eps_reqs)} epsilon requirement(s) but "
                f"{len(test.expected_results)} result block(s)",
            )

    elif test.kind is TestKind.DRIFT:
        if test.sequence is None or len(test.sequence) < 2:
            n = 0 if test.sequence is None else len(test.sequence)
            _err(out, path, "R-DRIFT-STEPS", f"drift needs at least 2 steps, found {n}")
        has_ref = profile.dataset_id(test, profile.REFERENCE_DATASET_ID) is not None
        try:
            gauss = profile.gaussian_reference(test)
        except profile.ProfileError as exc:
            _err(out, path, "R-DRIFT-REF", str(exc))
        else:
            if not has_ref and not gauss:
                _err(
                    out,
                    path,
                    "R-DRIFT-REF",
                    f"neither '{profile.REFERENCE_DATASET_ID}' nor mean/variance properties",
                )
        for name, default in (
            (profile.Z_THRESHOLD, profile.DEFAULT_Z_THRESHOLD),
            (profile.KS_THRESHOLD, profile.DEFAULT_KS_THRESHOLD),
        ):
            try:
                profile.threshold(test, name, default)
            except profile.ProfileError as exc:
                _err(out, path, "R-DRIFT-THRESHOLD", str(exc))


def _validate_description(doc: TestDescription) -> list[Violation]:
    out: list[Violation] = []
    counts = Counter(t.unique_id for t in doc.tests)
    for i, test in enumerate(doc.tests, 1):
        path = f"/TestDescription/TestGroup/Test[{i}]"
        if not test.unique_id:
            _err(out, path, "R-UID-UNIQUE", "empty uniqueId")
        elif counts[test.unique_id] > 1:
            _err(out, path, "R-UID-UNIQUE", f"duplicate uniqueId {test.unique_id!r}")
        _check_test(out, test, path)
    return out


def _validate_tps(doc: TestProgramSet, descriptions) -> list[Violation]:
    out: list[Violation] = []
    counts = Counter(doc.test_refs)
    index: Counter[str] = Counter()
    if descriptions is not None:
        for desc in descriptions:
            index.update(t.unique_id for t in desc.tests)
    conditioned = {pos for pos, ext in doc.ref_extensions if ext.name in profile.CONDITION_TAGS}
    for i, ref in enumerate(doc.test_refs):
        path = f"/TestProgramSet/TestGroup/TestRef[{i + 1}]"
        if not ref:
            _err(out, path, "R-TPS-DANGLING", "empty UniqueIdentifier")
            continue
        if counts[ref] > 1:
            _err(out, path, "R-UID-UNIQUE", f"test {ref!r} referenced more than once")
        if descriptions is not None and index[ref] != 1:
            what = "does not resolve" if index[ref] == 0 else "resolves to more than one test"
            _err(out, path, "R-TPS-DANGLING", f"reference {ref!r} {what}")
        if i in conditioned:
            _err(out, path, "R-TPS-CONDITION", "conditional execution is not supported")
    if any(ext.name in profile.CONDITION_TAGS for ext in doc.extensions):
        _err(out, "/TestProgramSet", "R-TPS-CONDITION", "conditional execution is not supported")
    return out


def validate(
    doc: Document, descriptions: Iterable[TestDescription] | None = None
) -> list[Violation]:
    """Check ``doc`` against the profile rules.

    ``descriptions`` is only consulted for a test program set; when it is
    None the dangling-reference check is skipped.
    """
    if isinstance(doc, TestDescription):
        out = _validate_description(doc)
    elif isinstance(doc, TestProgramSet):
        out = _validate_tps(doc, None if descriptions is None else list(descriptions))
    elif isinstance(doc, TestResultsDocument):
        out = []
        for i, entry in enumerate(doc.entries, 1):
            if entry.status in (Status.FAILED, Status.ERROR) and not entry.diagnostic:
                _err(
                    out,
                    f"/TestResults/TestResult[{i}]",
                    "R-RESULT-DIAGNOSTIC",
                    f"{entry.status.value} result for {entry.unique_id!r} has no diagnostic",
                )
    elif isinstance(doc, UutDescriptor):
        out = []
        if not doc.uut_identifier:
            _err(out, "/UUTDescription", "R-UUT-ID", "empty UUTIdentifier")
    elif isinstance(doc, EnvironmentDescriptor):
        out = []
        if doc.kind is EnvironmentKind.STATION and doc.preprocessing:
            _err(out, "/TestStation", "R-STATION-PREPROCESSING", "a station declares preprocessing")
    else:
        raise TypeError(f"not an ATML-ML document: {type(doc).__name__}")
    return sorted(out)


def has_errors(violations: Iterable[Violation]) -> bool:
    return any(v.severity is Severity.ERROR for v in violations)
