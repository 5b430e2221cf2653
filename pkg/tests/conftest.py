"""Shared fixtures: fixture paths, a fixed clock and network guards."""

from __future__ import annotations

import os
import socket
from pathlib import Path

import pytest

from helpers import FIXED_TIME, fixed_clock

FIXTURES = Path(__file__).parent / "fixtures"
LOCKFILES = FIXTURES / "lockfiles"
PONDS = FIXTURES / "ponds"


def pytest_collection_modifyitems(config, items):
    if os.environ.get("DEPSMELL_NETWORK_TESTS") == "1":
        return
    skip = pytest.mark.skip(reason="live network test; set DEPSMELL_NETWORK_TESTS=1 to run")
    for item in items:
        if "network" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def clock():
    return fixed_clock


@pytest.fixture
def fixed_time():
    return FIXED_TIME


@pytest.fixture
def lockfiles() -> Path:
    return LOCKFILES


@pytest.fixture
def ponds() -> Path:
    return PONDS


@pytest.fixture
def no_network(monkeypatch):
    """Make any socket connection attempt fail the test."""

    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted during an offline test")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "getaddrinfo", refuse)
