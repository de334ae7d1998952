"""Shared test configuration.

Every test must run offline: outbound TCP connections fail loudly instead of
silently reaching the network.
"""

import socket

import pytest


@pytest.fixture(autouse=True, scope="session")
def _no_network():
    real_connect = socket.socket.connect

    def guarded(self, address):
        if self.family in (socket.AF_INET, socket.AF_INET6):
            raise RuntimeError(f"test attempted a network connection to {address!r}")
        return real_connect(self, address)

    socket.socket.connect = guarded
    try:
        yield
    finally:
        socket.socket.connect = real_connect
