import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", deadline=None, max_examples=50, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def so3_round_solution():
    from xcurve import so3
    from xcurve.profiles import named_profile

    y = named_profile("cosine-round")["y"]
    return so3.solve(y)


@pytest.fixture(scope="session")
def so2_round_solution():
    from xcurve import so2
    from xcurve.profiles import named_profile

    return so2.solve(so2.ProfileSO2(**named_profile("sine-cosine-round")))


@pytest.fixture(scope="session")
def sigma0_data():
    from xcurve import so3

    return so3.build_sigma0()
