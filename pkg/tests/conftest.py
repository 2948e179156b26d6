"""Shared fixtures: cached closed-loop runs so slow presets execute once."""

from dataclasses import replace
from functools import lru_cache

import pytest

from plmpc import plant


@lru_cache(maxsize=None)
def _cached_run(name: str, seed: int, steps: int):
    cfg = replace(plant.preset(name), seed=seed, steps=steps)
    return plant.run_closed_loop(cfg)


@pytest.fixture(scope="session")
def run_preset():
    """Callable (name, seed=1, steps=500) -> RunLog, memoized for the session.

    Returned logs are shared between tests; treat them as read-only.
    """

    def runner(name, seed=1, steps=500):
        return _cached_run(name, int(seed), int(steps))

    return runner
