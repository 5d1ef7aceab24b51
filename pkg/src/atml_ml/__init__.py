"""ATML-style XML test documents for machine-learning units under test."""
from .document import (
    DatasetRef,
    EnvironmentDescriptor,
    NumericLimit,
    Status,
    TestCase,
    TestDescription,
    TestKind,
    TestProgramSet,
    TestRequirement,
    TestResultEntry,
    TestResultsDocument,
    UutDescriptor,
    evaluate_limit,
)
from .validator import Violation, validate
from .xmlio import parse_document, read_document, serialize_document

__version__ = "0.1.0"

__all__ = [
    "DatasetRef",
    "EnvironmentDescriptor",
    "NumericLimit",
    "Status",
    "TestCase",
    "TestDescription",
    "TestKind",
    "TestProgramSet",
    "TestRequirement",
    "TestResultEntry",
    "TestResultsDocument",
    "UutDescriptor",
    "Violation",
    "evaluate_limit",
    "parse_document",
    "read_document",
    "serialize_document",
    "validate",
]
