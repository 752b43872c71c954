import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def _clique_blocks(sizes, cross=False):
    """Dense adjacency of disjoint cliques; cross=True joins everything (K_n)."""
    n = int(sum(sizes))
    a = np.zeros((n, n), dtype=bool)
    if cross:
        a[:] = True
    else:
        start = 0
        for s in sizes:
            a[start : start + s, start : start + s] = True
            start += s
    np.fill_diagonal(a, False)
    return a


@pytest.fixture
def clique_blocks():
    return _clique_blocks


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
