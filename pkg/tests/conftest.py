import numpy as np
import pytest

from chaindecay import kernels, make_params

BACKENDS = ["python"] + (["compiled"] if kernels.HAVE_COMPILED else [])

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def weak_link():
    return make_params(1.0, 0.4)


@pytest.fixture(scope="session")
def strong_link():
    return make_params(1.3, 0.75)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
