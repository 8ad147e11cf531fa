import math

import numpy as np
import pytest

from app.dependencies.settings import get_settings

LN2 = math.log(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_capacity(monkeypatch):
    """Capacity guard lowered to 4096 amplitudes for the duration of a test."""
    monkeypatch.setenv("LAB_MAX_AMPLITUDES", "4096")
    get_settings.cache_clear()
    yield 4096
    monkeypatch.delenv("LAB_MAX_AMPLITUDES")
    get_settings.cache_clear()
