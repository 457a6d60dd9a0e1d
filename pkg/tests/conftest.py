import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def write_series(path, times, values, header=("year", "value")):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for t, v in zip(times, values):
            fh.write(f"{t},{'' if v is None else v}\n")
    return path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
