import sys
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return DATA_DIR / "golden"


@pytest.fixture(scope="session")
def micro_manifest() -> Path:
    """The committed synthetic micro-dataset bundle."""
    path = DATA_DIR / "micro" / "manifest.json"
    if not path.exists():
        pytest.fail("committed micro bundle missing; run scripts/regen_goldens.py")
    return path
