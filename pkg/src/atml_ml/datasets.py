"""Dataset identifiers resolved through a line-based manifest to CSV files.

Manifest lines look like ``DataSet_123=data/ds123.csv``; ``#`` starts a
comment and paths are relative to the manifest's directory.  CSV files have a
header row and put the integer class label in the last column.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np


class RegistryError(Exception):
    """Manifest could not be loaded."""


class DatasetNotFound(KeyError):
    def __init__(self, dataset_id: str) -> None:
        self.dataset_id = dataset_id
        super().__init__(dataset_id)

    def __str__(self) -> str:
        return f"dataset not found: {self.dataset_id!r}"


class IngestionError(ValueError):
    """A CSV cell or row could not be read; ``row``/``column`` are 1-based file positions."""

    def __init__(self, path, message: str, row: int | None = None, column: int | None = None):
        self.path = str(path)
        self.row = row
        self.column = column
        where = f" at row {row}, column {column}" if row is not None else ""
        super().__init__(f"{self.path}{where}: {message}")


@dataclass(frozen=True, eq=False)
class Dataset:
    id: str
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float)
        labels = np.array(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError("features must be a 2-d matrix with at least one row")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels length must equal the number of rows")
        if len(self.feature_names) != features.shape[1]:
            raise ValueError("one feature name per column is required")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        if np.any(labels < 0):
            raise ValueError("labels must be non-negative integers")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(self.id, features, self.labels, self.feature_names)

    def take(self, rows) -> "Dataset":
        return Dataset(self.id, self.features[rows], self.labels[rows], self.feature_names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.id == other.id
            and self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None  # type: ignore[assignment]


def read_key_values(path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RegistryError(f"cannot read {path}: {exc.strerror}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise RegistryError(f"{path}:{lineno}: expected 'key=value', got {raw!r}")
        if key in out:
            raise RegistryError(f"{path}:{lineno}: duplicate id {key!r}")
        out[key] = value
    return out


def read_manifest(path) -> dict[str, Path]:
    """Manifest entries with paths resolved against the manifest's directory."""
    path = Path(path)
    return {key: path.parent / value for key, value in read_key_values(path).items()}


def read_csv(path, dataset_id: str) -> Dataset:
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(path, f"cannot open: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestionError(path, "missing header row")
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise IngestionError(path, "need at least one feature column and a label column", 1)
        width = len(header)
        rows, labels = [], []
        for row_no, row in enumerate(reader, 2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != width:
                raise IngestionError(path, f"expected {width} cells, got {len(row)}", row_no)
            values = []
            for col_no, cell in enumerate(row[:-1], 1):
                try:
                    value = float(cell)
                except ValueError:
                    raise IngestionError(
                        path, f"non-numeric value {cell!r}", row_no, col_no
                    ) from None
                if not math.isfinite(value):
                    raise IngestionError(path, f"non-finite value {cell!r}", row_no, col_no)
                values.append(value)
            try:
                label = int(row[-1].strip())
            except ValueError:
                raise IngestionError(
                    path, f"label must be an integer, got {row[-1]!r}", row_no, width
                ) from None
            if label < 0:
                raise IngestionError(path, f"label must be non-negative, got {label}", row_no, width)
            rows.append(values)
            labels.append(label)
    if not rows:
        raise IngestionError(path, "no data rows")
    return Dataset(dataset_id, np.array(rows, dtype=float), np.array(labels), tuple(header[:-1]))


def write_csv(dataset: Dataset, path) -> None:
    """Write ``dataset`` so :func:`read_csv` reproduces it exactly (17 significant digits)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*dataset.feature_names, "label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([f"{v:.17g}" for v in row] + [int(label)])


class DatasetRegistry:
    """Read-only map from dataset identifier to CSV file."""

    def __init__(self, paths: Mapping[str, Path]) -> None:
        self._paths = dict(paths)

    @classmethod
    def from_manifest(cls, path) -> "DatasetRegistry":
        return cls(read_manifest(path))

    def __contains__(self, dataset_id: str) -> bool:
        return dataset_id in self._paths

    def __len__(self) -> int:
        return len(self._paths)

    def ids(self) -> list[str]:
        return list(self._paths)

    def path(self, dataset_id: str) -> Path:
        try:
            return self._paths[dataset_id]
        except KeyError:
            raise DatasetNotFound(dataset_id) from None

    def resolve(self, dataset_id: str) -> Dataset:
        return read_csv(self.path(dataset_id), dataset_id)


load_manifest = DatasetRegistry.from_manifest
