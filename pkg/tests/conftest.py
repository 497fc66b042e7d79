import numpy as np
import pytest

from imbtrees.synthetic_data import Dataset


def random_dataset(rng: np.random.Generator, n: int, d: int, *, levels: int | None = None) -> Dataset:
    """Small random dataset; ``levels`` restricts features to a few integer values (forces ties)."""
    if levels is None:
        x = rng.random((n, d))
    else:
        x = rng.integers(0, levels, size=(n, d)).astype(float)
    y = (rng.random(n) < rng.uniform(0.2, 0.8)).astype(np.int8)
    return Dataset(features=x, labels=y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
