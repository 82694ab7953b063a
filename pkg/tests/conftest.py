import functools

import numpy as np
import pytest

from wkbflow.polynomial import ComplexPolynomial
from wkbflow.stokes import analyze

# coefficient lists, constant term first
Q_AIRY = (0, 1)                 # x
Q_WELL = (1, 0, -1)             # 1 - x^2
Q_BARRIER = (-1, 0, 1)          # x^2 - 1
Q_CUBIC = (0, 1j, 1 + 1j, 1)    # x (x + 1) (x + i)


def poly(coeffs):
    return ComplexPolynomial(list(coeffs))


@functools.lru_cache(maxsize=None)
def geometry(coeffs, strict=True):
    return analyze(poly(coeffs), strict=strict)


def domain_with_anchor(geo, predicate):
    return next(d for d in geo.domains if predicate(d.anchor))


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
