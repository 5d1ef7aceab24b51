"""Run the three-test demo program twice: on clean data, then with the drift sample shifted by 5 sigma.

Prints the per-test summary and the report table for each run.
"""
import sys
import tempfile
from pathlib import Path

from atml_ml.cli import cmd_report, cmd_run
from atml_ml.synthetic import write_demo_registry

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
TPS = ROOT / "tests" / "data" / "tps_e2e.xml"
DESCRIPTIONS = [CORPUS / "cv.xml", CORPUS / "adversarial.xml", CORPUS / "drift_gaussian.xml"]


def main(seed=0):
    worst = 0
    with tempfile.TemporaryDirectory() as tmp:
        for label, shift in (("clean", 0.0), ("drifted", 5.0)):
            registry = write_demo_registry(Path(tmp) / label, seed=seed, drift_shift=shift)
            out = Path(tmp) / f"{label}.xml"
            print(f"== {label} (drift shift {shift:g} sigma)")
            worst = max(worst, cmd_run(
                TPS,
                DESCRIPTIONS,
                CORPUS / "uut.xml",
                registry,
                out,
                seed=seed,
                station_path=CORPUS / "station.xml",
                adapter_path=CORPUS / "adapter.xml",
            ))
            print()
            cmd_report(out)
            print()
    return worst


if __name__ == "__main__":
    sys.exit(main())
