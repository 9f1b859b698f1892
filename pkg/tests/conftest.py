import pytest

from besselfpt.boundary import PolynomialBoundary
from besselfpt.montecarlo import McConfig

ACCEPTANCE_LOG: list[str] = []


@pytest.fixture
def quadratic():
    return PolynomialBoundary((1.0, 0.0, 0.1))


@pytest.fixture
def linear():
    return PolynomialBoundary((1.0, 0.5))


@pytest.fixture
def small_mc():
    return McConfig(n_paths=20_000, n_steps=128, seed=11)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
