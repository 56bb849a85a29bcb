"""How the device reaches the server: a minimal POST-only interface.

The simulator deals only in (path, body bytes) -> (status, body bytes),
so it runs identically against a live HTTP server, an in-process ASGI
test client, or a scripted fake.
"""

from __future__ import annotations

from typing import Protocol

import httpx


class TransportError(Exception):
    """Connection-level failure: no HTTP status was obtained."""


class Transport(Protocol):
    def post(self, path: str, body: bytes) -> tuple[int, bytes]: ...


_HEADERS = {"content-type": "application/json"}


class HttpTransport:
    """Real network transport for live servers."""

    def __init__(self, base_url: str, timeout_s: float = 10.0):
        self._client = httpx.Client(base_url=base_url, timeout=timeout_s)

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        try:
            r = self._client.post(path, content=body, headers=_HEADERS)
        except httpx.HTTPError as e:
            raise TransportError(f"POST {path}: {e}") from e
        return r.status_code, r.content

    def close(self) -> None:
        self._client.close()


class ClientTransport:
    """Adapter over any client object with a requests-style ``post``
    (e.g. an in-process ASGI test client sharing the server's clock)."""

    def __init__(self, client):
        self._client = client

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        try:
            r = self._client.post(path, content=body, headers=_HEADERS)
        except Exception as e:  # the wrapped client's errors are opaque here
            raise TransportError(f"POST {path}: {e}") from e
        return r.status_code, r.content
