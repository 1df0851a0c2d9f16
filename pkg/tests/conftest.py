import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpnrepair import fixture  # noqa: E402


@pytest.fixture
def casino():
    return fixture("casino")


@pytest.fixture
def livelock():
    return fixture("livelock")


@pytest.fixture
def unbounded():
    return fixture("unbounded")
