import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from adaptive_sim import clustering, rbfnet
from adaptive_sim.scenario import kmeans_samples
from adaptive_sim.trajectory import standard_trajectory

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def traj():
    return standard_trajectory()


@pytest.fixture(scope="session")
def traj_samples(traj):
    return kmeans_samples(traj, 0.01)


@pytest.fixture(scope="session")
def optimized_centers(traj_samples):
    return clustering.kmeans(traj_samples, clustering.KmeansConfig(m=20, seed=0)).centers


@pytest.fixture(scope="session")
def lattice():
    return rbfnet.lattice_centers([[-1.0, 0.0, 1.0]] * 6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(label: str, ok: bool, detail: str):
        line = f"{label}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
