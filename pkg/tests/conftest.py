import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from atml_ml.datasets import DatasetRegistry
from atml_ml.models import ModelRegistry
from atml_ml.synthetic import write_demo_registry
from atml_ml.xmlio import read_document

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).parent / "golden"

CORPUS_NAMES = (
    "dmu_voltage",
    "cv_no_dataset",
    "cv",
    "adversarial",
    "adversarial_multi",
    "drift_reference",
    "drift_gaussian",
    "uut",
    "station",
    "adapter",
    "results_failed",
    "tps",
)


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.xml"


def corpus_doc(name: str):
    return read_document(corpus_path(name))


@pytest.fixture
def registry_dir(tmp_path):
    return write_demo_registry(tmp_path / "registry", seed=0)


@pytest.fixture
def shifted_registry_dir(tmp_path):
    return write_demo_registry(tmp_path / "shifted", seed=0, drift_shift=5.0)


@pytest.fixture
def registries(registry_dir):
    return (
        DatasetRegistry.from_manifest(registry_dir / "datasets.manifest"),
        ModelRegistry.from_manifest(registry_dir / "models.manifest"),
    )


class TickingClock:
    """Deterministic clock advancing one second per call."""

    def __init__(self, start=datetime(2024, 1, 1, tzinfo=timezone.utc)):
        self.now = start

    def __call__(self):
        current = self.now
        self.now += timedelta(seconds=1)
        return current


@pytest.fixture
def clock():
    return TickingClock()


# -- acceptance summary ----------------------------------------------------

_acceptance: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance.setdefault(name, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcomes in _acceptance.items():
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {name}")
