"""
Shared fixtures for the simulator test suite
"""

import os
import sys

import numpy as np
import pytest

# Ensure the repository root is importable as in main.py
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.components.channel_model import SystemParams  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def params() -> SystemParams:
    return SystemParams(t=8, alpha=1.0, seed=2024)


@pytest.fixture(autouse=True)
def _clean_link_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("LINK_"):
            monkeypatch.delenv(key)
