import sys
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from survbench.core import SurvivalDataset

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_dataset(rng, n=50, p=3, censor_prob=0.4, tie_levels=None):
    """Random dataset; ``tie_levels`` draws times from a small integer set."""
    if tie_levels:
        times = rng.integers(1, tie_levels + 1, n).astype(float)
    else:
        times = rng.exponential(1.0, n) + 1e-3
    events = rng.random(n) > censor_prob
    if not events.any():
        events[0] = True
    return SurvivalDataset(rng.standard_normal((n, p)), times, events)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_convergence():
    from survbench.exceptions import ConvergenceWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (len(s.split()[0]), s)):
            terminalreporter.write_line(line)
