import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from riesz_smc import chebyshev_gen as cg
from riesz_smc import hmm_models as hm

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cheb200():
    return cg.standard_normal_set(200)


@pytest.fixture(scope="session")
def cheb100():
    return cg.standard_normal_set(100)


@pytest.fixture(scope="session")
def lgss_data():
    p = hm.LgssParams()
    x, y = hm.lgss_simulate(250, p, seed=0)
    return p, x, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record and print a one-line PASS/FAIL for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        _VERDICTS.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
