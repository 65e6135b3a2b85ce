from fractions import Fraction

import pytest

from kstab.corpus import interval, kink, standard_corpus
from kstab.geometry import standard_simplex, unit_cube
from kstab.quantize import SubtorusDirections, ToricTestConfig

F = Fraction


@pytest.fixture(scope="session")
def corpus():
    return standard_corpus()


@pytest.fixture
def unit_interval():
    return interval()


@pytest.fixture
def square():
    return unit_cube(2)


@pytest.fixture
def triangle():
    return standard_simplex(2)


@pytest.fixture
def kink_tc():
    return ToricTestConfig.build(interval(), kink())


@pytest.fixture
def full1():
    return SubtorusDirections.full(1)


# -- acceptance reporting --------------------------------------------------------

_ACCEPTANCE = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = self.detail if exc is None else f"{exc_type.__name__}: {exc}".splitlines()[0]
        line = f"criterion {self.number} [{status}] {self.title}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE[self.number] = line
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
