"""XML reading and writing for the ATML-ML profile vocabulary.

Unknown elements never get dropped.  Each one is kept as an
:class:`~atml_ml.document.Extension` on the nearest record that carries an
``extensions`` field and written back at the end of that record's element,
so ``parse_document(serialize_document(d)) == d`` holds for every valid ``d``.
"""
from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from datetime import datetime, timezone

from .document import (
    PROFILE_ID,
    DatasetRef,
    Document,
    EnvironmentDescriptor,
    EnvironmentKind,
    ExpectedResult,
    Extension,
    Hardware,
    NumericLimit,
    PreprocessingStep,
    PropertyEntry,
    Software,
    Status,
    TestCase,
    TestDescription,
    TestKind,
    TestProgramSet,
    TestRequirement,
    TestResultEntry,
    TestResultsDocument,
    TestStep,
    UutDescriptor,
    check_invariants,
)

_INT_RE = re.compile(r"[+-]?\d+\Z")


class AtmlParseError(ValueError):
    """Input is not well-formed XML."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class StructuralError(ValueError):
    """A recognized element has the wrong content model."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}")


# -- reading ---------------------------------------------------------------


def _text(elem: ET.Element) -> str:
    return (elem.text or "").strip()


def _flat_text(elem: ET.Element) -> str:
    return "".join(elem.itertext()).strip()


def _float(elem: ET.Element, path: str, finite: bool = True) -> float:
    raw = _text(elem)
    try:
        value = float(raw)
    except ValueError:
        raise StructuralError(path, f"expected a number, got {raw!r}") from None
    if finite and not math.isfinite(value):
        raise StructuralError(path, f"expected a finite number, got {raw!r}")
    return value


def _scalar(elem: ET.Element, path: str) -> float | int:
    raw = _text(elem)
    if _INT_RE.match(raw):
        return int(raw)
    return _float(elem, path, finite=False)


def _attr(elem: ET.Element, name: str, path: str) -> str:
    value = elem.get(name)
    if value is None:
        raise StructuralError(path, f"missing attribute {name!r}")
    return value


def _status(elem: ET.Element, path: str) -> Status:
    raw = _text(elem)
    try:
        return Status(raw)
    except ValueError:
        raise StructuralError(path, f"unknown status {raw!r}") from None


class _Reader:
    """Walks a tree; ``ext`` is the extension list of the current record."""

    def limit(self, elem: ET.Element, path: str, ext: list[Extension]) -> NumericLimit:
        low = high = None
        unit = None
        for child in elem:
            cpath = f"{path}/{child.tag}"
            if child.tag == "Low":
                low = _float(child, cpath)
            elif child.tag == "High":
                high = _float(child, cpath)
            elif child.tag == "Unit":
                unit = _text(child)
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        if low is None or high is None:
            raise StructuralError(path, "TestLimit needs both Low and High")
        return NumericLimit(low, high, unit)

    def requirement(self, elem: ET.Element, path: str) -> TestRequirement:
        name = _attr(elem, "name", path)
        ext: list[Extension] = []
        values = []
        for child in elem:
            cpath = f"{path}/{child.tag}"
            if child.tag == "TestLimit":
                values.append(self.limit(child, cpath, ext))
            elif child.tag == "Value":
                values.append(_scalar(child, cpath))
            elif child.tag == "DatasetRef":
                values.append(DatasetRef(_text(child)))
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        if len(values) != 1:
            raise StructuralError(
                path, "TestRequirement needs exactly one of TestLimit, Value or DatasetRef"
            )
        return TestRequirement(name, values[0], tuple(ext))

    def prop(self, elem: ET.Element, path: str, ext: list[Extension]) -> PropertyEntry:
        name = _attr(elem, "name", path)
        value_elem = None
        for child in elem:
            if child.tag == "Value" and value_elem is None:
                value_elem = child
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        if value_elem is not None:
            return PropertyEntry(name, _float(value_elem, f"{path}/Value", finite=False))
        return PropertyEntry(name, _text(elem))

    def step(self, elem: ET.Element, path: str) -> TestStep:
        step_id = _attr(elem, "id", path)
        ext: list[Extension] = []
        description = None
        reqs, props = [], []
        for child in elem:
            if child.tag == "Description" and description is None:
                description = _text(child)
            elif child.tag == "TestRequirement":
                reqs.append(self.requirement(child, f"{path}/TestRequirement[{len(reqs) + 1}]"))
            elif child.tag == "Property":
                props.append(self.prop(child, f"{path}/Property[{len(props) + 1}]", ext))
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        return TestStep(step_id, description or "", tuple(reqs), tuple(props), tuple(ext))

    def expected(self, elem: ET.Element, path: str, ext: list[Extension]) -> ExpectedResult:
        name = _attr(elem, "name", path)
        limit = None
        for child in elem:
            cpath = f"{path}/{child.tag}"
            if child.tag == "TestLimit" and limit is None:
                limit = self.limit(child, cpath, ext)
            elif child.tag == "Status":
                if _status(child, cpath) is not Status.NOT_TESTED:
                    raise StructuralError(cpath, "status in a test description must be NotTested")
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        if limit is None:
            raise StructuralError(path, "NumericLimitTestResult needs a TestLimit")
        return ExpectedResult(name, limit)

    def test(self, elem: ET.Element, path: str) -> TestCase:
        name = _attr(elem, "name", path)
        uid = _attr(elem, "uniqueId", path)
        raw_kind = elem.get("kind", TestKind.GENERIC.value)
        try:
            kind = TestKind(raw_kind)
        except ValueError:
            raise StructuralError(path, f"unknown test kind {raw_kind!r}") from None
        ext: list[Extension] = []
        reqs, props, results = [], [], []
        sequence = None
        for child in elem:
            if child.tag == "TestRequirement":
                reqs.append(self.requirement(child, f"{path}/TestRequirement[{len(reqs) + 1}]"))
            elif child.tag == "Property":
                props.append(self.prop(child, f"{path}/Property[{len(props) + 1}]", ext))
            elif child.tag == "NumericLimitTestResult":
                cpath = f"{path}/NumericLimitTestResult[{len(results) + 1}]"
                results.append(self.expected(child, cpath, ext))
            elif child.tag == "Sequence" and sequence is None:
                steps = []
                for sub in child:
                    if sub.tag == "TestStep":
                        steps.append(self.step(sub, f"{path}/Sequence/TestStep[{len(steps) + 1}]"))
                    else:
                        ext.append(Extension(sub.tag, _flat_text(sub)))
                sequence = tuple(steps)
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        return TestCase(
            name=name,
            unique_id=uid,
            kind=kind,
            requirements=tuple(reqs),
            sequence=sequence,
            expected_results=tuple(results),
            properties=tuple(props),
            extensions=tuple(ext),
        )

    def test_description(self, root: ET.Element) -> TestDescription:
        path = "/TestDescription"
        ext: list[Extension] = []
        groups = [c for c in root if c.tag == "TestGroup"]
        if len(groups) != 1:
            raise StructuralError(path, "exactly one TestGroup is required")
        tests = []
        for child in root:
            if child.tag == "TestGroup":
                group_path = f"{path}/TestGroup"
                for sub in child:
                    if sub.tag == "Test":
                        tests.append(self.test(sub, f"{group_path}/Test[{len(tests) + 1}]"))
                    else:
                        ext.append(Extension(sub.tag, _flat_text(sub)))
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        group_name = _attr(groups[0], "name", f"{path}/TestGroup")
        return TestDescription(group_name, tuple(tests), Status.NOT_TESTED, tuple(ext))

    def uut(self, root: ET.Element) -> UutDescriptor:
        path = "/UUTDescription"
        ext: list[Extension] = []
        fields = {"UUTType": None, "UUTIdentifier": None, "UUTDescription": None}
        chars = []
        for child in root:
            cpath = f"{path}/{child.tag}"
            if child.tag in fields:
                if fields[child.tag] is not None:
                    raise StructuralError(cpath, "element may appear only once")
                fields[child.tag] = _text(child)
            elif child.tag == "UUTCharacteristics":
                for sub in child:
                    if sub.tag == "Characteristic":
                        chars.append(self.prop(sub, f"{cpath}/Characteristic[{len(chars) + 1}]", ext))
                    else:
                        ext.append(Extension(sub.tag, _flat_text(sub)))
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        if fields["UUTIdentifier"] is None:
            raise StructuralError(path, "missing child element 'UUTIdentifier'")
        return UutDescriptor(
            uut_type=fields["UUTType"] or "",
            uut_identifier=fields["UUTIdentifier"],
            uut_description=fields["UUTDescription"] or "",
            characteristics=tuple(chars),
            extensions=tuple(ext),
        )

    def environment(self, root: ET.Element, path: str) -> EnvironmentDescriptor:
        kind = EnvironmentKind.STATION if root.tag == "TestStation" else EnvironmentKind.ADAPTER
        ext: list[Extension] = []
        software, hardware, steps = [], [], []
        for child in root:
            cpath = f"{path}/{child.tag}"
            if child.tag == "Software":
                software.append(Software(_attr(child, "name", cpath), child.get("version", "")))
                ext.extend(Extension(s.tag, _flat_text(s)) for s in child)
            elif child.tag == "Hardware":
                hardware.append(Hardware(_attr(child, "name", cpath), _text(child)))
                ext.extend(Extension(s.tag, _flat_text(s)) for s in child)
            elif child.tag == "Preprocessing" and kind is EnvironmentKind.ADAPTER:
                for sub in child:
                    if sub.tag != "Step":
                        ext.append(Extension(sub.tag, _flat_text(sub)))
                        continue
                    try:
                        steps.append(PreprocessingStep(_text(sub)))
                    except ValueError:
                        raise StructuralError(
                            f"{cpath}/Step", f"unknown preprocessing step {_text(sub)!r}"
                        ) from None
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        return EnvironmentDescriptor(
            kind=kind,
            name=root.get("name", ""),
            software=tuple(software),
            hardware=tuple(hardware),
            preprocessing=tuple(steps),
            extensions=tuple(ext),
        )

    def result_entry(self, elem: ET.Element, path: str) -> TestResultEntry:
        ext: list[Extension] = []
        uid = status = stamp = diagnostic = None
        measured = []
        for child in elem:
            cpath = f"{path}/{child.tag}"
            if child.tag == "UniqueIdentifier":
                uid = _text(child)
            elif child.tag == "Status":
                status = _status(child, cpath)
            elif child.tag == "TimeStamp":
                stamp = parse_timestamp(_text(child), cpath)
            elif child.tag == "Measured":
                measured.append((_attr(child, "name", cpath), _float(child, cpath, finite=False)))
            elif child.tag == "Diagnostic":
                for sub in child:
                    if sub.tag == "Message" and diagnostic is None:
                        diagnostic = _text(sub)
                    else:
                        ext.append(Extension(sub.tag, _flat_text(sub)))
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        for tag, value in (("UniqueIdentifier", uid), ("Status", status), ("TimeStamp", stamp)):
            if value is None:
                raise StructuralError(path, f"missing child element {tag!r}")
        return TestResultEntry(uid, status, stamp, tuple(measured), diagnostic, tuple(ext))

    def results(self, root: ET.Element) -> TestResultsDocument:
        path = "/TestResults"
        ext: list[Extension] = []
        entries = []
        station = adapter = None
        for child in root:
            if child.tag == "TestResult":
                entries.append(self.result_entry(child, f"{path}/TestResult[{len(entries) + 1}]"))
            elif child.tag == "TestStation" and station is None:
                station = self.environment(child, f"{path}/TestStation")
            elif child.tag == "TestAdapter" and adapter is None:
                adapter = self.environment(child, f"{path}/TestAdapter")
            else:
                ext.append(Extension(child.tag, _flat_text(child)))
        return TestResultsDocument(tuple(entries), station, adapter, tuple(ext))

    def program_set(self, root: ET.Element) -> TestProgramSet:
        path = "/TestProgramSet"
        ext: list[Extension] = []
        ref_ext: list[tuple[int, Extension]] = []
        groups = [c for c in root if c.tag == "TestGroup"]
        if len(groups) != 1:
            raise StructuralError(path, "exactly one TestGroup is required")
        refs: list[str] = []
        for child in root:
            if child.tag != "TestGroup":
                ext.append(Extension(child.tag, _flat_text(child)))
                continue
            for sub in child:
                if sub.tag != "TestRef":
                    ext.append(Extension(sub.tag, _flat_text(sub)))
                    continue
                rpath = f"{path}/TestGroup/TestRef[{len(refs) + 1}]"
                uid = None
                for leaf in sub:
                    if leaf.tag == "UniqueIdentifier" and uid is None:
                        uid = _text(leaf)
                    else:
                        ref_ext.append((len(refs), Extension(leaf.tag, _flat_text(leaf))))
                if uid is None:
                    raise StructuralError(rpath, "missing child element 'UniqueIdentifier'")
                refs.append(uid)
        group_name = _attr(groups[0], "name", f"{path}/TestGroup")
        return TestProgramSet(group_name, tuple(refs), tuple(ext), tuple(ref_ext))


def parse_timestamp(raw: str, path: str = "TimeStamp") -> datetime:
    text = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise StructuralError(path, f"not an ISO 8601 timestamp: {raw!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp


def format_timestamp(stamp: datetime) -> str:
    return stamp.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_document(xml_text: str | bytes) -> Document:
    """Parse one ATML-ML document, dispatching on the root element."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise AtmlParseError(f"malformed XML: {exc.msg}", line, column) from None
    profile = root.get("profile")
    if profile is not None and profile != PROFILE_ID:
        raise StructuralError(f"/{root.tag}", f"unsupported profile {profile!r}")
    reader = _Reader()
    if root.tag == "TestDescription":
        return reader.test_description(root)
    if root.tag == "UUTDescription":
        return reader.uut(root)
    if root.tag in ("TestStation", "TestAdapter"):
        return reader.environment(root, f"/{root.tag}")
    if root.tag == "TestResults":
        return reader.results(root)
    if root.tag == "TestProgramSet":
        return reader.program_set(root)
    raise StructuralError(f"/{root.tag}", "unrecognized document root")


def read_document(path) -> Document:
    with open(path, "rb") as fh:
        return parse_document(fh.read())


# -- writing ---------------------------------------------------------------


def _num(value: float | int) -> str:
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return repr(float(value))


def _sub(parent: ET.Element, tag: str, text: str | None = None, **attrs: str) -> ET.Element:
    elem = ET.SubElement(parent, tag, attrs)
    if text is not None:
        elem.text = text
    return elem


def _write_ext(parent: ET.Element, extensions) -> None:
    for ext in extensions:
        _sub(parent, ext.name, ext.text or None)


def _write_limit(parent: ET.Element, limit: NumericLimit) -> None:
    elem = _sub(parent, "TestLimit")
    _sub(elem, "Low", _num(limit.low))
    _sub(elem, "High", _num(limit.high))
    if limit.unit is not None:
        _sub(elem, "Unit", limit.unit)


def _write_requirement(parent: ET.Element, req: TestRequirement) -> None:
    elem = _sub(parent, "TestRequirement", name=req.name)
    if isinstance(req.value, NumericLimit):
        _write_limit(elem, req.value)
    elif isinstance(req.value, DatasetRef):
        _sub(elem, "DatasetRef", req.value.identifier)
    else:
        _sub(elem, "Value", _num(req.value))
    _write_ext(elem, req.extensions)


def _write_prop(parent: ET.Element, tag: str, prop: PropertyEntry) -> None:
    elem = _sub(parent, tag, name=prop.name)
    if isinstance(prop.value, str):
        elem.text = prop.value or None
    else:
        _sub(elem, "Value", _num(prop.value))


def _write_test(parent: ET.Element, test: TestCase) -> None:
    elem = _sub(parent, "Test", name=test.name, uniqueId=test.unique_id, kind=test.kind.value)
    for req in test.requirements:
        _write_requirement(elem, req)
    for prop in test.properties:
        _write_prop(elem, "Property", prop)
    if test.sequence is not None:
        seq = _sub(elem, "Sequence")
        for step in test.sequence:
            s = _sub(seq, "TestStep", id=step.step_id)
            if step.description:
                _sub(s, "Description", step.description)
            for req in step.requirements:
                _write_requirement(s, req)
            for prop in step.properties:
                _write_prop(s, "Property", prop)
            _write_ext(s, step.extensions)
    for res in test.expected_results:
        r = _sub(elem, "NumericLimitTestResult", name=res.name)
        _write_limit(r, res.limit)
        _sub(r, "Status", Status.NOT_TESTED.value)
    _write_ext(elem, test.extensions)


def _write_environment(elem: ET.Element, env: EnvironmentDescriptor) -> None:
    for sw in env.software:
        _sub(elem, "Software", name=sw.name, version=sw.version)
    for hw in env.hardware:
        _sub(elem, "Hardware", hw.details or None, name=hw.name)
    if env.preprocessing:
        pre = _sub(elem, "Preprocessing")
        for step in env.preprocessing:
            _sub(pre, "Step", step.value)
    _write_ext(elem, env.extensions)


def _env_tag(env: EnvironmentDescriptor) -> str:
    return "TestStation" if env.kind is EnvironmentKind.STATION else "TestAdapter"


def _build(doc: Document) -> ET.Element:
    if isinstance(doc, TestDescription):
        root = ET.Element("TestDescription", profile=PROFILE_ID)
        group = _sub(root, "TestGroup", name=doc.group_name)
        for test in doc.tests:
            _write_test(group, test)
        _write_ext(root, doc.extensions)
    elif isinstance(doc, UutDescriptor):
        root = ET.Element("UUTDescription", profile=PROFILE_ID)
        _sub(root, "UUTType", doc.uut_type)
        _sub(root, "UUTIdentifier", doc.uut_identifier)
        _sub(root, "UUTDescription", doc.uut_description)
        if doc.characteristics:
            chars = _sub(root, "UUTCharacteristics")
            for prop in doc.characteristics:
                _write_prop(chars, "Characteristic", prop)
        _write_ext(root, doc.extensions)
    elif isinstance(doc, EnvironmentDescriptor):
        root = ET.Element(_env_tag(doc), profile=PROFILE_ID, name=doc.name)
        _write_environment(root, doc)
    elif isinstance(doc, TestResultsDocument):
        root = ET.Element("TestResults", profile=PROFILE_ID)
        for env in (doc.station, doc.adapter):
            if env is not None:
                _write_environment(_sub(root, _env_tag(env), name=env.name), env)
        for entry in doc.entries:
            e = _sub(root, "TestResult")
            _sub(e, "UniqueIdentifier", entry.unique_id)
            _sub(e, "Status", entry.status.value)
            _sub(e, "TimeStamp", format_timestamp(entry.timestamp))
            for name, value in entry.measured:
                _sub(e, "Measured", _num(value), name=name)
            if entry.diagnostic is not None:
                _sub(_sub(e, "Diagnostic"), "Message", entry.diagnostic)
            _write_ext(e, entry.extensions)
        _write_ext(root, doc.extensions)
    elif isinstance(doc, TestProgramSet):
        root = ET.Element("TestProgramSet", profile=PROFILE_ID)
        group = _sub(root, "TestGroup", name=doc.group_name)
        for i, ref in enumerate(doc.test_refs):
            r = _sub(group, "TestRef")
            _sub(r, "UniqueIdentifier", ref)
            _write_ext(r, [ext for pos, ext in doc.ref_extensions if pos == i])
        _write_ext(root, doc.extensions)
    else:
        raise TypeError(f"not an ATML-ML document: {type(doc).__name__}")
    return root


def serialize_document(doc: Document) -> str:
    """Render ``doc`` as indented XML text.

    Raises :class:`~atml_ml.document.InvariantError` when the document breaks
    one of its type invariants; nothing is written in that case.
    """
    check_invariants(doc)
    root = _build(doc)
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
