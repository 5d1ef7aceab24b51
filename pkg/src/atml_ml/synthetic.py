"""Seeded toy datasets and a ready-made registry directory for demos and tests."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .datasets import Dataset, write_csv

BLOBS_ID = "DataSet_123"
NOISY_ID = "DataSet_Noisy"
DRIFT_CURRENT_ID = "Drift_Current"
DRIFT_REFERENCE_ID = "Drift_Reference"
LR_UUT_ID = "UUT_ML_001"
KNN_UUT_ID = "UUT_KNN_001"


def make_blobs(n: int = 100, seed: int = 0, separation: float = 3.0, dataset_id: str = BLOBS_ID) -> Dataset:
    """Two unit-variance Gaussian blobs centred at -separation and +separation on x1.

    Half the rows (rounded down) belong to class 0; row order is shuffled.
    """
    rng = np.random.default_rng(seed)
    n0 = n // 2
    labels = np.array([0] * n0 + [1] * (n - n0))
    centers = np.zeros((n, 2))
    centers[:, 0] = np.where(labels == 1, separation, -separation)
    features = centers + rng.standard_normal((n, 2))
    order = rng.permutation(n)
    return Dataset(dataset_id, features[order], labels[order], ("x1", "x2"))


def make_noisy(n: int = 100, seed: int = 0, dataset_id: str = NOISY_ID) -> Dataset:
    """Blob features with labels drawn independently of them; accuracy sits near chance."""
    blobs = make_blobs(n, seed)
    labels = np.random.default_rng(seed + 1).permutation(blobs.labels)
    return Dataset(dataset_id, blobs.features, labels, blobs.feature_names)


def make_gaussian(
    n: int = 500,
    seed: int = 0,
    mean: float = 0.0,
    std: float = 1.0,
    n_features: int = 2,
    dataset_id: str = DRIFT_CURRENT_ID,
) -> Dataset:
    rng = np.random.default_rng(seed)
    features = mean + std * rng.standard_normal((n, n_features))
    labels = (features[:, 0] > mean).astype(int)
    names = tuple(f"x{j + 1}" for j in range(n_features))
    return Dataset(dataset_id, features, labels, names)


def write_demo_registry(root, seed: int = 0, drift_shift: float = 0.0) -> Path:
    """Write CSVs, ``datasets.manifest``, model specs and ``models.manifest`` under ``root``.

    ``drift_shift`` moves every feature of the current drift sample by that
    many reference standard deviations.
    """
    root = Path(root)
    data_dir = root / "data"
    model_dir = root / "models"
    data_dir.mkdir(parents=True, exist_ok=True)
    model_dir.mkdir(parents=True, exist_ok=True)

    datasets = {
        BLOBS_ID: ("data/blobs.csv", make_blobs(100, seed)),
        NOISY_ID: ("data/noisy.csv", make_noisy(100, seed)),
        DRIFT_REFERENCE_ID: (
            "data/drift_reference.csv",
            make_gaussian(500, seed + 100, dataset_id=DRIFT_REFERENCE_ID),
        ),
        DRIFT_CURRENT_ID: (
            "data/drift_current.csv",
            make_gaussian(500, seed + 200, mean=drift_shift, dataset_id=DRIFT_CURRENT_ID),
        ),
    }
    lines = ["# dataset id = CSV path relative to this file"]
    for ds_id, (rel, ds) in datasets.items():
        write_csv(ds, root / rel)
        lines.append(f"{ds_id}={rel}")
    (root / "datasets.manifest").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (model_dir / "lr.model").write_text(
        "kind=logistic_regression\nlearning_rate=0.1\nepochs=500\n", encoding="utf-8"
    )
    (model_dir / "knn.model").write_text("kind=knn\nk=3\n", encoding="utf-8")
    (root / "models.manifest").write_text(
        f"{LR_UUT_ID}=models/lr.model\n{KNN_UUT_ID}=models/knn.model\n", encoding="utf-8"
    )
    return root
