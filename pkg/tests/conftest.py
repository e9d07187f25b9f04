import itertools
import math

import numpy as np
import pytest

from pacfourier.data import LabeledDataset
from pacfourier.fourier import cube_points


def brute_point_prob(biases, x):
    return math.prod(p if xi > 0 else 1 - p for p, xi in zip(biases, x))


def brute_coefficient(biases, f, S):
    """Reference f_S from a plain Python loop over the cube; ``f`` maps a tuple to a real."""
    total = 0.0
    for x in itertools.product((-1, 1), repeat=len(biases)):
        psi = 1.0
        for j in S:
            mu = 2 * biases[j] - 1
            psi *= (x[j] - mu) / math.sqrt(1 - mu * mu)
        total += brute_point_prob(biases, x) * f(x) * psi
    return total


def maj(*xs):
    return 1 if sum(xs) > 0 else -1


@pytest.fixture
def maj3_table():
    pts = cube_points(3)
    return np.where(pts.sum(axis=1) > 0, 1.0, -1.0)


def full_cube_dataset(d, label_fn):
    X = cube_points(d)
    y = np.array([label_fn(tuple(int(v) for v in row)) for row in X])
    return LabeledDataset(X, y)


# ------------------------------------------------------------ acceptance log

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion and show it immediately."""
    config = request.config
    reporter = config.pluginmanager.get_plugin("terminalreporter")

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
        config.stash.setdefault(_ACCEPTANCE, {})[number] = line
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
