import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bf2filter.events import LabeledStream, SensorGeometry, make_events  # noqa: E402


@pytest.fixture
def geom():
    return SensorGeometry(346, 260)


def random_stream(geometry, n, t_max, seed=0, labelled=True):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, geometry.width, n)
    y = rng.integers(0, geometry.height, n)
    t = np.sort(rng.integers(0, t_max, n))
    p = rng.integers(0, 2, n)
    label = rng.integers(0, 2, n) if labelled else None
    return LabeledStream(geometry, make_events(x, y, t, p, label))


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
