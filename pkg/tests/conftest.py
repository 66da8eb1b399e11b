import pytest

from frontlab.phaseplane import critical_speed, wave_trajectory
from frontlab.reaction import bistable, logistic
from frontlab.waveprofile import reconstruct_profile


@pytest.fixture(scope="session")
def logi():
    return logistic()


@pytest.fixture(scope="session")
def logi_speed(logi):
    return critical_speed(logi, 2.0)


@pytest.fixture(scope="session")
def logi_profile(logi):
    # exact speed: the profile is 1 - e^(xi/2)
    return reconstruct_profile(wave_trajectory(logi, 2.0, 1.0))


@pytest.fixture(scope="session")
def bist():
    return bistable(0.3)


@pytest.fixture(scope="session")
def bist_speed(bist):
    return critical_speed(bist, 2.0)



_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
