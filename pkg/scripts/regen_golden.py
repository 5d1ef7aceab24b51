"""Regenerate the failure-report golden files under tests/golden.

Only needed when the results format changes on purpose; review the diff before committing.
"""
import io
import tempfile
from pathlib import Path

from atml_ml.cli import cmd_run
from atml_ml.synthetic import write_demo_registry

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"
GOLDEN = ROOT / "tests" / "golden"


def main():
    GOLDEN.mkdir(exist_ok=True)
    stdout = io.StringIO()
    with tempfile.TemporaryDirectory() as tmp:
        registry = write_demo_registry(Path(tmp) / "registry", seed=0)
        cmd_run(
            DATA / "tps_cv_only.xml",
            [DATA / "cv_noisy.xml"],
            ROOT / "corpus" / "uut.xml",
            registry,
            GOLDEN / "cv_failure_results.xml",
            out=stdout,
        )
    (GOLDEN / "cv_failure_stdout.txt").write_text(stdout.getvalue())
    print(stdout.getvalue(), end="")


if __name__ == "__main__":
    main()
