from __future__ import annotations

import os
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nomamec.simharness import ChannelModel, gen_channels, table_one_params

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_scenario(seed: int, **overrides):
    """Standard scenario with one seeded Rayleigh draw."""
    p = table_one_params(**overrides)
    return replace(p, channels=gen_channels(ChannelModel(), np.random.default_rng(seed)))


@pytest.fixture
def base():
    return table_one_params()


@pytest.fixture
def rand_scenario():
    return random_scenario


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
