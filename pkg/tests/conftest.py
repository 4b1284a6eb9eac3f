import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from fracdense import FracParams

settings.register_profile(
    "fracdense",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fracdense"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(params=[0.25, 0.5, 0.75], ids=lambda s: f"s={s}")
def params(request):
    return FracParams(request.param)


@pytest.fixture
def half():
    return FracParams(0.5)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS):
        ok, detail = module.RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
