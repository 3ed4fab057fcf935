import numpy as np
import pytest

# lines recorded by tests.test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = []


def central_diff(f, theta, h=1e-5):
    """Central finite differences of scalar f at theta (theta is perturbed in place)."""
    g = np.zeros_like(theta)
    for i in range(theta.size):
        old = theta[i]
        theta[i] = old + h
        fp = f()
        theta[i] = old - h
        fm = f()
        theta[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(ACCEPTANCE_LINES), key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
