from __future__ import annotations

import random

import pytest
from hypothesis import HealthCheck, settings

from repcl.clock import ClockConfig, CounterMode, RepClTimestamp

settings.register_profile(
    "repcl", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repcl")


@pytest.fixture
def config():
    return ClockConfig(n=3, epsilon=5, interval_us=1)


@pytest.fixture
def config16():
    return ClockConfig(n=16, epsilon=15, interval_us=100)


def random_timestamp(rng: random.Random, config: ClockConfig, max_mx: int = 1000) -> RepClTimestamp:
    """Arbitrary structurally-valid timestamp under ``config``."""
    mx = rng.randrange(max_mx)
    owner = rng.randrange(config.n)
    offsets = {}
    for k in range(config.n):
        if rng.random() < 0.4:
            offsets[k] = rng.randrange(config.epsilon)
    counters: dict[int, int] = {}
    counter_sum = 0
    if config.counter_mode is CounterMode.SUM:
        counter_sum = rng.randrange(1 << min(config.counter_bits, 8)) if rng.random() < 0.3 else 0
    else:
        for k in range(config.n):
            if rng.random() < 0.15:
                counters[k] = rng.randrange(1, 1 << min(config.counter_bits, 8))
    return RepClTimestamp(
        mx=mx, owner=owner, offsets=offsets, counters=counters, counter_sum=counter_sum
    )
