import os

import pytest
from hypothesis import HealthCheck, settings

from clbwtune.backend.sim import cpu_like, gpu_like, uniform
from clbwtune.configspace import DeviceClass, DeviceSpec

from helpers import sweep_all_ops

settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture(scope="session")
def gpu_sweeps():
    return sweep_all_ops(gpu_like())


@pytest.fixture(scope="session")
def cpu_sweeps():
    return sweep_all_ops(cpu_like())


@pytest.fixture(scope="session")
def uniform_model():
    return uniform(DeviceSpec("flat", DeviceClass.GPU, 512, 100e9, True))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
