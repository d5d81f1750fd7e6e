import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lvseasons import example_params, validate_params
from lvseasons.params import DOMINANCE, EXAMPLE_X0


@pytest.fixture(scope="session")
def ex1():
    return example_params(1)


@pytest.fixture(scope="session")
def ex2():
    return example_params(2)


@pytest.fixture(scope="session")
def ex3():
    return example_params(3)


@pytest.fixture(scope="session")
def examples():
    return {k: example_params(k) for k in (1, 2, 3)}


@pytest.fixture(scope="session")
def dominance():
    return validate_params(DOMINANCE)


@pytest.fixture(scope="session")
def x0s():
    return {k: np.array(v) for k, v in EXAMPLE_X0.items()}


def reference_flow(params, x, t, rtol=1e-13, atol=1e-15):
    """Good-season flow from scipy's own DOP853, used as an independent oracle."""
    b, A = params.b, params.A
    sol = solve_ivp(lambda _, y: y * (b - A @ y), (0.0, t), np.asarray(x, float),
                    method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1]


def reference_map(params, x):
    c = np.exp(-params.mu * params.bad_duration)
    return reference_flow(params, np.asarray(x, float) * c, params.good_duration)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
