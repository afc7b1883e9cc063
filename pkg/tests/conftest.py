import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FROZEN_PATH = Path(__file__).with_name("data") / "frozen.json"
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def frozen() -> dict:
    return json.loads(FROZEN_PATH.read_text())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
