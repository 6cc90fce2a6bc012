import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from walk_oracle.graph_gen import complete_graph, gen_cycle, gen_hypercube, gen_random_regular

settings.register_profile(
    "repo", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def c4():
    return gen_cycle(4)


@pytest.fixture(scope="session")
def c3():
    return gen_cycle(3)


@pytest.fixture(scope="session")
def k4():
    return complete_graph(4)


@pytest.fixture(scope="session")
def cube3():
    return gen_hypercube(3)


@pytest.fixture(scope="session")
def rr64():
    return gen_random_regular(64, 3, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report one line each; the lines are repeated in the
# terminal summary so they survive output capture
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def log(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
