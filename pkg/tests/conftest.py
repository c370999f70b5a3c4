import pytest

from bernstein_lab.barriers import build_barriers
from bernstein_lab.foliation import integrate_leaf
from bernstein_lab.perturbed_leaf import build_perturbed_leaf

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def profile():
    return integrate_leaf(s_max=200.0, tol=1e-12)


@pytest.fixture(scope="session")
def perturbed(profile):
    return build_perturbed_leaf(profile)


@pytest.fixture(scope="session")
def spec(perturbed):
    return build_barriers(perturbed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
