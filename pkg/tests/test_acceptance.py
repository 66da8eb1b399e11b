"""The twelve acceptance criteria, each at its stated tolerance.

Every criterion prints one PASS/FAIL line (also repeated in the terminal
summary). Jobs that produce several criteria run once and are cached.
"""

import pytest

from frontlab.suite import JOBS

CRITERIA = {
    1: "speed",
    2: "profile",
    3: "catalog",
    4: "solver",
    5: "box",
    6: "class-a",
    7: "box",
    8: "dichotomy",
    9: "barrier",
    10: "slow-wave",
    11: "box",
    12: "refine",
}


@pytest.fixture(scope="module")
def job_results(tmp_path_factory):
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = {c.number: c for c in JOBS[name](str(tmp_path_factory.mktemp(name)))}
        return cache[name]

    return get


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, job_results, acceptance_lines):
    check = job_results(CRITERIA[number])[number]
    line = check.line()
    print(line)
    acceptance_lines.append(line)
    assert check.passed, line
