import re
from collections import defaultdict

import numpy as np
import pytest

from qfim.families import phase_noise_qubit

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")
_ACCEPTANCE = defaultdict(list)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example1():
    """Phase-and-noise qubit at (theta, nu) = (0.3, 0.2)."""
    return phase_noise_qubit().at([0.3, 0.2])


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m and (report.when == "call" or report.outcome != "passed"):
        _ACCEPTANCE[int(m.group(1))].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        outcomes = _ACCEPTANCE[n]
        failed = sorted({name for name, o in outcomes if o != "passed"})
        status = "FAIL" if failed else "PASS"
        detail = f" ({', '.join(failed)})" if failed else f" ({len(outcomes)} check{'s' * (len(outcomes) != 1)})"
        terminalreporter.write_line(f"criterion {n}: {status}{detail}")
