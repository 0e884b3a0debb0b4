"""Shared fixtures: hypothesis profile and a deterministic clock."""

import threading

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


class FakeClock:
    """Deterministic stand-in for a per-thread monotonic clock.

    Every thread sees its own counter advancing by a fixed step per call,
    so elapsed times are bit-exact across identical schedules.  The step is
    a power of two, which keeps every accumulated difference exact.
    """

    def __init__(self, step: float = 2**-10):
        self.step = step
        self._local = threading.local()

    def __call__(self) -> float:
        value = getattr(self._local, "value", 0.0) + self.step
        self._local.value = value
        return value


@pytest.fixture
def fake_clock():
    return FakeClock()
