import itertools
import math

import numpy as np
import pytest

from fastrcs.rcs import Dataset


def naive_i_index(subset, X, y, h):
    """Exhaustive average of the incongruence index over every line through two subset points.

    Written with plain Python floats for simple regression (p=2) so it shares
    no code with the library.
    """
    n = len(y)
    values = []
    for i, j in itertools.combinations(sorted(subset), 2):
        xi, xj = X[i], X[j]
        if xi == xj:
            continue
        b = (y[j] - y[i]) / (xj - xi)
        a = y[i] - b * xi
        r2 = [(y[k] - a - b * X[k]) ** 2 for k in range(n)]
        num = sum(r2[k] for k in subset) / len(subset)
        den = sum(sorted(r2)[:h]) / h
        if num == 0 and den == 0:
            values.append(0.0)
        else:
            values.append(math.log(num / den))
    return sum(values) / len(values)


def regression_data(rng, n, p, noise=1.0):
    X = rng.standard_normal((n, p - 1))
    y = 1.0 + X @ rng.uniform(-2, 2, p - 1) + noise * rng.standard_normal(n)
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    """Remember one acceptance verdict and print it; the summary hook repeats them."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
