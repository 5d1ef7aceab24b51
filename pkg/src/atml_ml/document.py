"""Typed, immutable model of the ATML-ML document kinds.

Six document kinds exist: test descriptions, UUT descriptions, test station
and test adapter descriptions (one type, two kinds), test results and test
program sets.  Everything is a frozen dataclass holding tuples so parsed
documents can be shared freely between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Union

PROFILE_ID = "atml-ml/1"


class TestKind(str, Enum):
    CROSS_VALIDATION = "CrossValidation"
    ADVERSARIAL = "Adversarial"
    DRIFT = "Drift"
    GENERIC = "Generic"


class Status(str, Enum):
    NOT_TESTED = "NotTested"
    PASSED = "Passed"
    FAILED = "Failed"
    ERROR = "Error"


class EnvironmentKind(str, Enum):
    STATION = "Station"
    ADAPTER = "Adapter"


class PreprocessingStep(str, Enum):
    NONE = "None"
    STANDARDIZE = "Standardize"
    MINMAX = "MinMax"


# keep pytest from collecting the enums above as test classes
TestKind.__test__ = False  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Extension:
    """An unrecognized element kept verbatim as name and flattened text."""

    name: str
    text: str = ""


@dataclass(frozen=True)
class NumericLimit:
    low: float
    high: float
    unit: str | None = None

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class DatasetRef:
    """Identifier value of a requirement, e.g. ``DataSet_123``."""

    identifier: str


RequirementValue = Union[NumericLimit, float, int, DatasetRef]


@dataclass(frozen=True)
class TestRequirement:
    __test__ = False

    name: str
    value: RequirementValue
    extensions: tuple[Extension, ...] = ()


@dataclass(frozen=True)
class PropertyEntry:
    name: str
    value: float | str


@dataclass(frozen=True)
class TestStep:
    __test__ = False

    step_id: str
    description: str = ""
    requirements: tuple[TestRequirement, ...] = ()
    properties: tuple[PropertyEntry, ...] = ()
    extensions: tuple[Extension, ...] = ()


@dataclass(frozen=True)
class ExpectedResult:
    """A ``NumericLimitTestResult`` block: the limit a named measurement must meet."""

    name: str
    limit: NumericLimit


@dataclass(frozen=True)
class TestCase:
    __test__ = False

    name: str
    unique_id: str
    kind: TestKind = TestKind.GENERIC
    requirements: tuple[TestRequirement, ...] = ()
    sequence: tuple[TestStep, ...] | None = None
    expected_results: tuple[ExpectedResult, ...] = ()
    properties: tuple[PropertyEntry, ...] = ()
    extensions: tuple[Extension, ...] = ()

    def all_requirements(self) -> tuple[TestRequirement, ...]:
        """Test-level requirements followed by those of each step, in order."""
        reqs = list(self.requirements)
        for step in self.sequence or ():
            reqs.extend(step.requirements)
        return tuple(reqs)

    def all_properties(self) -> tuple[PropertyEntry, ...]:
        props = list(self.properties)
        for step in self.sequence or ():
            props.extend(step.properties)
        return tuple(props)

    def requirement(self, name: str) -> TestRequirement | None:
        """First requirement (test or step level) whose name matches, ignoring case."""
        key = name.casefold()
        for req in self.all_requirements():
            if req.name.casefold() == key:
                return req
        return None


@dataclass(frozen=True)
class TestDescription:
    __test__ = False

    group_name: str
    tests: tuple[TestCase, ...] = ()
    initial_status: Status = Status.NOT_TESTED
    extensions: tuple[Extension, ...] = ()

    def find(self, unique_id: str) -> TestCase | None:
        for test in self.tests:
            if test.unique_id == unique_id:
                return test
        return None


@dataclass(frozen=True)
class UutDescriptor:
    uut_type: str
    uut_identifier: str
    uut_description: str = ""
    characteristics: tuple[PropertyEntry, ...] = ()
    extensions: tuple[Extension, ...] = ()


@dataclass(frozen=True)
class Software:
    name: str
    version: str = ""


@dataclass(frozen=True)
class Hardware:
    name: str
    details: str = ""


@dataclass(frozen=True)
class EnvironmentDescriptor:
    kind: EnvironmentKind
    name: str
    software: tuple[Software, ...] = ()
    hardware: tuple[Hardware, ...] = ()
    preprocessing: tuple[PreprocessingStep, ...] = ()
    extensions: tuple[Extension, ...] = ()


def _utc_seconds(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        raise ValueError("timestamp must be timezone-aware")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class TestResultEntry:
    __test__ = False

    unique_id: str
    status: Status
    timestamp: datetime
    measured: tuple[tuple[str, float], ...] = ()
    diagnostic: str | None = None
    extensions: tuple[Extension, ...] = ()

    def __post_init__(self) -> None:
        # wire format carries whole seconds in UTC; normalize so round trips compare equal
        object.__setattr__(self, "timestamp", _utc_seconds(self.timestamp))


@dataclass(frozen=True)
class TestResultsDocument:
    __test__ = False

    entries: tuple[TestResultEntry, ...] = ()
    station: EnvironmentDescriptor | None = None
    adapter: EnvironmentDescriptor | None = None
    extensions: tuple[Extension, ...] = ()

    def counts(self) -> dict[str, int]:
        out = {s.value: 0 for s in (Status.PASSED, Status.FAILED, Status.ERROR, Status.NOT_TESTED)}
        for entry in self.entries:
            out[entry.status.value] += 1
        return out


@dataclass(frozen=True)
class TestProgramSet:
    __test__ = False

    group_name: str
    test_refs: tuple[str, ...] = ()
    extensions: tuple[Extension, ...] = ()
    # unrecognized children of individual TestRef elements, keyed by ref position
    ref_extensions: tuple[tuple[int, Extension], ...] = ()


Document = Union[
    TestDescription,
    UutDescriptor,
    EnvironmentDescriptor,
    TestResultsDocument,
    TestProgramSet,
]


def evaluate_limit(value: float, limit: NumericLimit) -> Status:
    """Passed iff ``low <= value <= high``; bounds are inclusive.

    Raises ValueError for a non-finite value, which callers turn into an
    Error outcome.
    """
    if not math.isfinite(value):
        raise ValueError(f"measured value {value!r} is not finite")
    return Status.PASSED if limit.contains(value) else Status.FAILED


class InvariantError(ValueError):
    """A document violates one of its type invariants."""

    def __init__(self, invariant: str, where: str = "") -> None:
        self.invariant = invariant
        self.where = where
        super().__init__(f"{invariant}" + (f" at {where}" if where else ""))


def _check_limit(limit: NumericLimit, where: str) -> None:
    if not (math.isfinite(limit.low) and math.isfinite(limit.high)):
        raise InvariantError("limit bounds must be finite", where)
    if limit.low > limit.high:
        raise InvariantError("limit low must not exceed high", where)


def _check_requirement(req: TestRequirement, where: str) -> None:
    if not req.name:
        raise InvariantError("requirement name must be nonempty", where)
    value = req.value
    if isinstance(value, NumericLimit):
        _check_limit(value, where)
    elif isinstance(value, DatasetRef):
        if not value.identifier:
            raise InvariantError("identifier value must be nonempty", where)
    elif isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvariantError("requirement value has unsupported type", where)


def _check_properties(props, where: str) -> None:
    for prop in props:
        if not prop.name:
            raise InvariantError("property name must be nonempty", where)


def check_invariants(doc: Document) -> None:
    """Raise :class:`InvariantError` naming the first violated invariant."""
    if isinstance(doc, TestDescription):
        seen: set[str] = set()
        for i, test in enumerate(doc.tests, 1):
            where = f"Test[{i}]"
            if not test.unique_id:
                raise InvariantError("test unique_id must be nonempty", where)
            if test.unique_id in seen:
                raise InvariantError(f"duplicate test unique_id {test.unique_id!r}", where)
            seen.add(test.unique_id)
            for req in test.requirements:
                _check_requirement(req, where)
            _check_properties(test.properties, where)
            for res in test.expected_results:
                _check_limit(res.limit, f"{where}/NumericLimitTestResult[{res.name}]")
            if test.kind is TestKind.DRIFT and (test.sequence is None or len(test.sequence) < 2):
                raise InvariantError("drift test needs a sequence of at least 2 steps", where)
            step_ids: set[str] = set()
            for step in test.sequence or ():
                if step.step_id in step_ids:
                    raise InvariantError(f"duplicate step id {step.step_id!r}", where)
                step_ids.add(step.step_id)
                for req in step.requirements:
                    _check_requirement(req, f"{where}/TestStep[{step.step_id}]")
                _check_properties(step.properties, f"{where}/TestStep[{step.step_id}]")
    elif isinstance(doc, UutDescriptor):
        if not doc.uut_identifier:
            raise InvariantError("uut_identifier must be nonempty")
        _check_properties(doc.characteristics, "UUTCharacteristics")
    elif isinstance(doc, EnvironmentDescriptor):
        if doc.kind is EnvironmentKind.STATION and doc.preprocessing:
            raise InvariantError("a test station carries no preprocessing steps")
    elif isinstance(doc, TestResultsDocument):
        for i, entry in enumerate(doc.entries, 1):
            if entry.status in (Status.FAILED, Status.ERROR) and not entry.diagnostic:
                raise InvariantError(
                    f"{entry.status.value} result needs a nonempty diagnostic", f"TestResult[{i}]"
                )
        for env in (doc.station, doc.adapter):
            if env is not None:
                check_invariants(env)
    elif isinstance(doc, TestProgramSet):
        seen = set()
        for i, ref in enumerate(doc.test_refs, 1):
            if not ref:
                raise InvariantError("test reference must be nonempty", f"TestRef[{i}]")
            if ref in seen:
                raise InvariantError(f"duplicate test reference {ref!r}", f"TestRef[{i}]")
            seen.add(ref)
    else:
        raise TypeError(f"not an ATML-ML document: {type(doc).__name__}")
