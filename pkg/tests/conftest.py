import os
from pathlib import Path

import pytest


def dataset_path(name: str) -> Path:
    root = Path(os.environ.get("RBSKM_DATA_DIR", Path(__file__).resolve().parent.parent / "data"))
    return root / f"{name}.mtx"


def dataset_or_skip(name: str) -> Path:
    """Path of a locally provided .mtx dataset, or skip the test.

    The named collection matrices are not redistributable with the
    package; drop them under ./data (or RBSKM_DATA_DIR) to enable the
    dataset-backed checks.
    """
    path = dataset_path(name)
    if not path.exists():
        pytest.skip(f"dataset {name}.mtx not present under {path.parent}")
    return path
