"""``atml-ml`` command line: validate, run and report.

Exit codes: 0 all passed / valid, 1 at least one test did not pass,
2 validation violations, 3 usage, I/O or resolution error.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from .datasets import DatasetRegistry, RegistryError
from .document import (
    EnvironmentDescriptor,
    EnvironmentKind,
    Status,
    TestDescription,
    TestProgramSet,
    TestResultsDocument,
    UutDescriptor,
)
from .engine import ResolutionError, RunContext, run_tps
from .models import ModelRegistry
from .validator import Violation, has_errors, validate
from .xmlio import (
    AtmlParseError,
    StructuralError,
    format_timestamp,
    read_document,
    serialize_document,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_ERROR = 3


class CliError(Exception):
    pass


def _load(path, expected: type | None = None):
    try:
        doc = read_document(path)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from exc
    except (AtmlParseError, StructuralError) as exc:
        raise CliError(f"{path}: {exc}") from exc
    if expected is not None and not isinstance(doc, expected):
        raise CliError(f"{path}: expected a {expected.__name__}, got a {type(doc).__name__}")
    return doc


def _print_violations(violations: list[Violation], out) -> None:
    for v in violations:
        print(v.format(), file=out)


def cmd_validate(paths: list[str], out=None) -> int:
    out = out or sys.stdout
    docs = [(p, _load(p)) for p in paths]
    descriptions = [d for _, d in docs if isinstance(d, TestDescription)]
    found: list[Violation] = []
    for _, doc in docs:
        if isinstance(doc, TestProgramSet):
            found.extend(validate(doc, descriptions if descriptions else None))
        else:
            found.extend(validate(doc))
    _print_violations(found, out)
    return EXIT_INVALID if has_errors(found) else EXIT_OK


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _measured_text(measured) -> str:
    if not measured:
        return "-"
    return ",".join(f"{value:.4f}" for _, value in measured)


def _exit_for(results: TestResultsDocument) -> int:
    return EXIT_OK if all(e.status is Status.PASSED for e in results.entries) else EXIT_FAILED


def cmd_run(
    tps_path,
    description_paths,
    uut_path,
    registry_dir,
    out_path,
    seed: int = 0,
    station_path=None,
    adapter_path=None,
    clip01: bool = False,
    out=None,
) -> int:
    out = out or sys.stdout
    tps = _load(tps_path, TestProgramSet)
    descriptions = [_load(p, TestDescription) for p in description_paths]
    uut = _load(uut_path, UutDescriptor)
    station = _load(station_path, EnvironmentDescriptor) if station_path else None
    adapter = _load(adapter_path, EnvironmentDescriptor) if adapter_path else None
    if station is not None and station.kind is not EnvironmentKind.STATION:
        raise CliError(f"{station_path}: expected a TestStation document")
    if adapter is not None and adapter.kind is not EnvironmentKind.ADAPTER:
        raise CliError(f"{adapter_path}: expected a TestAdapter document")

    # dangling references are a resolution problem (exit 3), checked by the engine
    violations = [v for doc in descriptions for v in validate(doc)]
    violations += [v for v in validate(tps) if v.rule_id != "R-TPS-DANGLING"]
    for doc in (uut, station, adapter):
        if doc is not None:
            violations += validate(doc)
    if has_errors(violations):
        _print_violations(violations, out)
        return EXIT_INVALID

    registry_dir = Path(registry_dir)
    try:
        datasets = DatasetRegistry.from_manifest(registry_dir / "datasets.manifest")
        models = ModelRegistry.from_manifest(registry_dir / "models.manifest")
    except RegistryError as exc:
        raise CliError(str(exc)) from exc
    ctx = RunContext(datasets, models, uut, station, adapter, seed=seed, clip01=clip01)
    try:
        results = run_tps(tps, descriptions, ctx)
    except ResolutionError as exc:
        raise CliError(str(exc)) from exc

    try:
        _write_atomic(Path(out_path), serialize_document(results))
    except OSError as exc:
        raise CliError(f"{out_path}: {exc.strerror or exc}") from exc
    for entry in results.entries:
        print(f"{entry.unique_id} {entry.status.value} measured={_measured_text(entry.measured)}", file=out)
    return _exit_for(results)


def cmd_report(results_path, out=None) -> int:
    out = out or sys.stdout
    results = _load(results_path, TestResultsDocument)
    header = ("UniqueIdentifier", "Status", "TimeStamp", "Measured", "Diagnostic")
    rows = []
    for e in results.entries:
        measured = "; ".join(f"{name}={value:.4f}" for name, value in e.measured) or "-"
        rows.append((e.unique_id, e.status.value, format_timestamp(e.timestamp), measured, e.diagnostic or ""))
    widths = [max([len(header[i])] + [len(r[i]) for r in rows]) for i in range(4)]
    for row in [header, *rows]:
        cells = [row[i].ljust(widths[i]) for i in range(4)] + [row[4]]
        print("  ".join(cells).rstrip(), file=out)
    counts = results.counts()
    print(" ".join(f"{k}={v}" for k, v in counts.items()), file=out)
    return _exit_for(results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atml-ml", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check documents against the profile rules")
    p.add_argument("paths", nargs="+")

    p = sub.add_parser("run", help="execute a test program set")
    p.add_argument("--tps", required=True)
    p.add_argument("--descriptions", action="append", required=True)
    p.add_argument("--uut", required=True)
    p.add_argument("--registry", required=True, help="directory with datasets.manifest and models.manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--station")
    p.add_argument("--adapter")
    p.add_argument("--clip01", action="store_true", help="clip adversarial inputs to [0, 1]")

    p = sub.add_parser("report", help="summarize a results document")
    p.add_argument("results")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        if args.command == "validate":
            return cmd_validate(args.paths)
        if args.command == "run":
            if args.seed < 0:
                raise CliError("--seed must be non-negative")
            return cmd_run(
                args.tps,
                args.descriptions,
                args.uut,
                args.registry,
                args.out,
                seed=args.seed,
                station_path=args.station,
                adapter_path=args.adapter,
                clip01=args.clip01,
            )
        return cmd_report(args.results)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
