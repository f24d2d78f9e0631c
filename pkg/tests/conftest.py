import numpy as np
import pytest

from floquet_lab import build_grid, make_coefficients, trace_xi

MATHIEU_C = {"expr": "1 + 0.5*cos(2*pi*x1)"}


def coeffs_1d(a=1.0, b=0.0, c=0.0, size=64):
    return make_coefficients({"a": [[a]], "b": [b], "c": c}, build_grid(1, [size]))


def coeffs_2d(a=((1.0, 0.0), (0.0, 1.0)), b=(0.0, 0.0), c=0.0, size=4):
    spec = {"a": [list(row) for row in a], "b": list(b), "c": c}
    return make_coefficients(spec, build_grid(2, [size, size]))


@pytest.fixture(scope="session")
def mathieu():
    return coeffs_1d(c=MATHIEU_C)


@pytest.fixture(scope="session")
def mathieu_drift():
    return coeffs_1d(b=0.3, c=MATHIEU_C)


@pytest.fixture(scope="session")
def divergence_form():
    return coeffs_1d(
        a={"expr": "1 + 0.2*cos(2*pi*x1)"}, b={"expr": "0.4*pi*sin(2*pi*x1)"}, c=0.0
    )


@pytest.fixture(scope="session")
def helmholtz():
    return coeffs_2d(c=1.0)


@pytest.fixture(scope="session")
def circle(helmholtz):
    return trace_xi(helmholtz, 64)


@pytest.fixture(scope="session")
def ellipse():
    return trace_xi(coeffs_2d(a=((1.0, 0.0), (0.0, 4.0)), c=1.0), 64)


@pytest.fixture(scope="session")
def periodic_2d():
    """A genuinely variable 2D operator, small enough for dense eigensolves."""
    return coeffs_2d(
        a=((1.0, 0.2), (0.2, 1.5)),
        b=(0.2, -0.1),
        c={"expr": "1 + 0.3*cos(2*pi*x1)*cos(2*pi*x2)"},
        size=8,
    )


@pytest.fixture(scope="session")
def periodic_2d_surface(periodic_2d):
    return trace_xi(periodic_2d, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report ----------------------------------------------------------

ACCEPTANCE = {}


def record(number, title, passed, detail):
    """Store one acceptance verdict; the summary is printed at session end."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
