import os

import pytest
from hypothesis import HealthCheck, settings

from cascade_spectrum import DetectorParams, SystemParams

settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "40")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def fig3():
    """Resonance, g1 = g2 = 1, gamma = 0.1."""
    return SystemParams(g1=1.0, g2=1.0, gamma=0.1, delta=0.0, delta_bar=0.0)


@pytest.fixture
def unit_detector():
    return DetectorParams(mu=1.0, m_eff=1.0, r1=1.0, r2=1.0)


# acceptance results are collected here by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
