import math
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atml_ml.document import (
    DatasetRef,
    EnvironmentDescriptor,
    EnvironmentKind,
    ExpectedResult,
    Extension,
    InvariantError,
    NumericLimit,
    PreprocessingStep,
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
from atml_ml.xmlio import AtmlParseError, StructuralError, parse_document, serialize_document

from conftest import CORPUS_NAMES, corpus_doc, corpus_path
from strategies import finite


def test_parse_voltage_measurement():
    doc = corpus_doc("dmu_voltage")
    assert isinstance(doc, TestDescription)
    assert doc.group_name == "Voltage Measurement"
    assert doc.initial_status is Status.NOT_TESTED
    (test,) = doc.tests
    assert test.name == "Measure Voltage"
    assert test.requirements[0].value == NumericLimit(-10.0, 10.0, "V")
    assert test.expected_results == (ExpectedResult("Voltage", NumericLimit(-10.0, 10.0, "V")),)


def test_parse_empty_group():
    doc = parse_document('<TestDescription><TestGroup name="Empty"/></TestDescription>')
    assert doc == TestDescription("Empty", ())


def test_parse_cv_dataset_reference():
    (test,) = corpus_doc("cv").tests
    pairs = [(r.name, r.value) for r in test.requirements]
    assert ("Dataset ID", DatasetRef("DataSet_123")) in pairs
    assert ("Folds", 5) in pairs
    assert isinstance(test.requirement("folds").value, int)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_corpus_round_trip(name):
    doc = corpus_doc(name)
    assert parse_document(serialize_document(doc)) == doc


def test_malformed_xml_reports_position():
    with pytest.raises(AtmlParseError) as info:
        parse_document("<TestDescription>\n  <TestGroup name='x'>\n</TestDescription>")
    assert info.value.line == 3
    assert info.value.column is not None


def test_non_numeric_low_names_path():
    text = corpus_path("cv").read_text().replace("<Low>0.8</Low>", "<Low>abc</Low>")
    with pytest.raises(StructuralError) as info:
        parse_document(text)
    assert info.value.path.endswith("Test[1]/NumericLimitTestResult[1]/TestLimit/Low")


@pytest.mark.parametrize(
    "xml",
    [
        "<Bogus/>",
        "<TestDescription/>",
        '<TestDescription><TestGroup name="g"><Test name="t"/></TestGroup></TestDescription>',
        '<TestDescription><TestGroup name="g"><Test name="t" uniqueId="a" kind="Weird"/>'
        "</TestGroup></TestDescription>",
        '<TestDescription><TestGroup name="g"><Test name="t" uniqueId="a">'
        '<TestRequirement name="r"/></Test></TestGroup></TestDescription>',
        '<TestDescription profile="atml-ml/9"><TestGroup name="g"/></TestDescription>',
        "<TestResults><TestResult><Status>Passed</Status></TestResult></TestResults>",
    ],
)
def test_structural_errors(xml):
    with pytest.raises(StructuralError):
        parse_document(xml)


def test_unknown_elements_are_preserved():
    base = corpus_path("cv").read_text()
    extended = base.replace(
        '<TestRequirement name="Folds">',
        "<VendorNote>stratify by site</VendorNote>\n"
        '<TestRequirement name="Folds"><Hint>k</Hint>',
    )
    plain, rich = parse_document(base), parse_document(extended)
    assert rich.tests[0].extensions == (Extension("VendorNote", "stratify by site"),)
    assert rich.tests[0].requirements[0].extensions == (Extension("Hint", "k"),)
    assert parse_document(serialize_document(rich)) == rich
    # recognized content is unchanged
    strip = lambda t: [(r.name, r.value) for r in t.requirements]
    assert strip(rich.tests[0]) == strip(plain.tests[0])
    assert rich.tests[0].expected_results == plain.tests[0].expected_results


def test_serialize_refuses_failed_without_diagnostic():
    doc = TestResultsDocument(
        (TestResultEntry("CV_001", Status.FAILED, datetime(2024, 1, 1, tzinfo=timezone.utc)),)
    )
    with pytest.raises(InvariantError, match="diagnostic"):
        serialize_document(doc)


@pytest.mark.parametrize(
    "doc, fragment",
    [
        (TestDescription("g", (TestCase("a", "A"), TestCase("b", "A"))), "duplicate test unique_id"),
        (
            TestDescription("g", (TestCase("a", "A", requirements=(TestRequirement("r", NumericLimit(1, 0)),)),)),
            "low must not exceed high",
        ),
        (TestDescription("g", (TestCase("d", "D", TestKind.DRIFT),)), "at least 2 steps"),
        (TestProgramSet("g", ("A", "A")), "duplicate test reference"),
        (EnvironmentDescriptor(EnvironmentKind.STATION, "s", preprocessing=(PreprocessingStep.MINMAX,)), "station"),
        (UutDescriptor("t", ""), "uut_identifier"),
    ],
)
def test_serialize_refuses_invariant_violations(doc, fragment):
    with pytest.raises(InvariantError, match=fragment):
        serialize_document(doc)


def test_tps_serializes_refs_in_order():
    text = serialize_document(TestProgramSet("Machine Learning Model Validation", ("CV", "ADV", "DRIFT")))
    import xml.etree.ElementTree as ET

    root = ET.fromstring(text)
    refs = [r.findtext("UniqueIdentifier") for r in root.iter("TestRef")]
    assert refs == ["CV", "ADV", "DRIFT"]


def test_timestamp_comparison_uses_the_instant():
    text = corpus_path("results_failed").read_text().replace("2023-06-01T12:00:00Z", "2023-06-01T14:00:00+02:00")
    assert parse_document(text) == corpus_doc("results_failed")


# -- limits ----------------------------------------------------------------


@pytest.mark.parametrize(
    "value, expected",
    [(0.85, Status.PASSED), (0.8, Status.PASSED), (1.0, Status.PASSED), (0.79, Status.FAILED), (1.01, Status.FAILED)],
)
def test_evaluate_limit_cv_range(value, expected):
    assert evaluate_limit(value, NumericLimit(0.8, 1.0)) is expected


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_evaluate_limit_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        evaluate_limit(bad, NumericLimit(0.0, 1.0))


@given(finite, finite, finite, finite)
def test_evaluate_limit_monotone(a, b, v1, v2):
    low, high = sorted((a, b))
    v1, v2 = sorted((v1, v2))
    if low <= v1 and v2 <= high:
        assert evaluate_limit(v1, NumericLimit(low, high)) is Status.PASSED
        assert evaluate_limit(v2, NumericLimit(low, high)) is Status.PASSED


# -- round trip over generated documents -----------------------------------

from strategies import descriptions, documents, tag, text  # noqa: E402


@settings(max_examples=150, deadline=None)
@given(documents)
def test_round_trip_identity(doc):
    assert parse_document(serialize_document(doc)) == doc


@settings(max_examples=50, deadline=None)
@given(descriptions(), st.builds(Extension, tag, text))
def test_extra_element_never_changes_recognized_fields(doc, ext):
    import xml.etree.ElementTree as ET

    root = ET.fromstring(serialize_document(doc))
    for test_elem in root.iter("Test"):
        ET.SubElement(test_elem, ext.name).text = ext.text
    reparsed = parse_document(ET.tostring(root, encoding="unicode"))
    for before, after in zip(doc.tests, reparsed.tests):
        assert after.requirements == before.requirements
        assert after.expected_results == before.expected_results
        assert after.sequence == before.sequence
        assert after.extensions == before.extensions + (ext,)
