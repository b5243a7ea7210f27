import os
import time
from pathlib import Path

import numpy as np
import pytest

from specrep.graph import Graph

DATA_ROOT = Path(os.environ.get("SPECREP_DATA", Path(__file__).parent / "data"))


def dataset_dir(name):
    """Directory holding ``<name>_A.txt`` under ``$SPECREP_DATA`` or
    ``tests/data``; ``None`` when absent."""
    for d in (DATA_ROOT / name, DATA_ROOT):
        if (d / f"{name}_A.txt").is_file():
            return d
    return None


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(n):
    return Graph(n, [(0, j) for j in range(1, n)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def mutag():
    from specrep.graph import load_tu_dataset
    d = dataset_dir("MUTAG")
    if d is None:
        pytest.skip("MUTAG not available")
    return load_tu_dataset(d, "MUTAG")


@pytest.fixture(scope="session")
def trained_sgr():
    """The default-config model, trained once per session.

    ``train_seconds`` is attached for the runtime criterion.
    """
    from specrep.estimators import SGR
    start = time.perf_counter()
    est = SGR(random_state=0).fit()
    est.train_seconds = time.perf_counter() - start
    return est


# ------------------------------------------------------------ acceptance log

ACCEPTANCE = {}


def record(number, ok, detail):
    """Log one acceptance line and print it; the caller asserts."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
