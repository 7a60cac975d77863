from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

import wol

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CASES = Path(wol.__file__).parent / "casestudies"


@pytest.fixture
def cases():
    return CASES


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
