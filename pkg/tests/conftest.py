import numpy as np
import pytest

from qbayes.qalg import DensityOperator


def random_density(rng, d, factor_dims=()):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real, tuple(factor_dims))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test body sets ``rec["detail"]``."""
    rec = {"detail": ""}
    yield rec
    failed = getattr(request.node, "rep_call", None)
    status = "PASS" if failed is not None and failed.passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {request.node.name}: {rec['detail']}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
