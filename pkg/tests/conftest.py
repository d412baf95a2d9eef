import pytest

from gdfcv import simulate_bernoulli, simulate_gaussian


def pytest_terminal_summary(terminalreporter):
    """Reprint the acceptance-criterion PASS/FAIL lines in one block."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gauss250():
    return simulate_gaussian(250, 1)


@pytest.fixture(scope="session")
def bern300():
    return simulate_bernoulli(300, 2)


@pytest.fixture(scope="session")
def gauss60():
    return simulate_gaussian(60, 3)
