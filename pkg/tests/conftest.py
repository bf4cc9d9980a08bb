import pytest

from pxeigen import GriddedDomain, VariableExponent

SQUARE = ((0.0, 1.0), (0.0, 1.0))


@pytest.fixture(scope="session")
def unit_interval():
    return GriddedDomain.interval(0.0, 1.0, 512)


@pytest.fixture(scope="session")
def coarse_interval():
    return GriddedDomain.interval(0.0, 1.0, 128)


@pytest.fixture(scope="session")
def unit_square():
    return GriddedDomain.rectangle(SQUARE, 64)


@pytest.fixture(scope="session")
def p2():
    return VariableExponent.constant(2.0)


@pytest.fixture(scope="session")
def p_affine():
    return VariableExponent.affine([2.0, 1.0])


@pytest.fixture(scope="session")
def p2_square():
    return VariableExponent.constant(2.0, SQUARE)


VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one acceptance line; the test then asserts the outcome."""

    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        VERDICTS[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
