import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fbmstore.storage_sim import simulate_maxima

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# Brownian ladder shared by the gamma example and the decay-rate acceptance run.
BROWNIAN_LADDER = dict(h=0.5, horizons=(2.0, 4.0, 8.0, 64.0), step=2.0**-8, reps=100_000, seed=7)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def brownian_maxima():
    """Running maxima (reps, 4) at t = 2, 4, 8 and the reference horizon 64."""
    cfg = dict(BROWNIAN_LADDER)
    start = time.perf_counter()
    m = simulate_maxima(cfg["h"], list(cfg["horizons"]), cfg["step"], cfg["reps"], cfg["seed"])
    cfg["seconds"] = time.perf_counter() - start
    return cfg, m


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
