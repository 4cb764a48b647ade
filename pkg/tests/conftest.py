import numpy as np
import pytest

from xcoupler.designs import PLAN_1, PLAN_2, design_matrix, rounded_m1
from xcoupler.response import sparams


@pytest.fixture(scope="session")
def plan1():
    return PLAN_1


@pytest.fixture(scope="session")
def plan2():
    return PLAN_2


@pytest.fixture(scope="session")
def m1():
    return design_matrix(1)


@pytest.fixture(scope="session")
def m1_rounded():
    return rounded_m1()


@pytest.fixture(scope="session")
def m1_sweep(m1, plan1):
    f = np.linspace(1.5e9, 7.0e9, 2201)
    return sparams(m1, plan1, f)


_ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Log one PASS/FAIL line for an acceptance criterion, then return ``ok``.
    ``ok=None`` logs an informative line."""

    def _record(label, ok, detail):
        tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{tag}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
