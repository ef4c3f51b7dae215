import numpy as np
import pytest
from hypothesis import settings

from tsqc.hilbert import Ket, ProjectiveMeasurement

settings.register_profile("tsqc", max_examples=200, deadline=None)
settings.load_profile("tsqc")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(number: int, name: str, passed: bool, detail: str = ""):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {name}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture
def z2():
    return ProjectiveMeasurement.standard(2, ["0", "1"])


@pytest.fixture
def holes():
    basis = [Ket.basis(3, i) for i in range(3)]
    return basis, ("hole1", "hole2", "hole3")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
