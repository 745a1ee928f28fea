import numpy as np
import pytest

from covaudit.data import Dataset


def make_dataset(m=200, d=3, seed=0, p=0.9, with_y=False, with_size=False):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (m, d))
    z = (rng.uniform(size=m) < p).astype(int)
    return Dataset(
        features=X,
        z=z,
        y=rng.normal(size=m) if with_y else None,
        set_size=rng.uniform(1, 3, m) if with_size else None,
    )


@pytest.fixture
def small_dataset():
    return make_dataset()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
