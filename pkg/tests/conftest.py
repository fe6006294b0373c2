# tests/conftest.py
import sys
from pathlib import Path

import numpy as np
import pytest

# repository root on sys.path, so config and utils import as in corf.py
BASE_DIR = Path(__file__).resolve().parent.parent
if str(BASE_DIR) not in sys.path:
    sys.path.insert(0, str(BASE_DIR))

from utils.tiling import builtin_dodecahedron, builtin_pentagon  # noqa: E402


@pytest.fixture(scope="session")
def pentagon():
    return builtin_pentagon()


@pytest.fixture(scope="session")
def dodecahedron():
    return builtin_dodecahedron()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
