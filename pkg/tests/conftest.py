import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from uncertts import _kernels

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA_DIR = Path(__file__).resolve().parents[1] / "data" / "ucr"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(_kernels.available_backends()))
def kernels(request):
    """Each available kernel backend in turn."""
    return _kernels.available_backends()[request.param]


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def record(criterion, passed, detail):
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
