import numpy as np
import pytest

from starmap import _backend


def pytest_report_header(config):
    return f"starmap kernel backend: {_backend.BACKEND}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def blobs():
    """Four well separated Gaussian blobs, 50 points each, in 5-D."""
    g = np.random.default_rng(7)
    centers = g.normal(scale=10.0, size=(4, 5))
    X = np.repeat(centers, 50, axis=0) + g.normal(size=(200, 5))
    labels = np.repeat(np.arange(4), 50)
    return X, labels


requires_compiled = pytest.mark.skipif(
    _backend.compiled is None, reason="compiled kernels not built")


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda c: int(c[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
