import numpy as np
import pytest

from gibbswave.sampling import GibbsSpec

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: report(criterion, passed, detail)."""

    def _add(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))

    return _add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")


@pytest.fixture(scope="session")
def spec16():
    return GibbsSpec.build(2.0, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
