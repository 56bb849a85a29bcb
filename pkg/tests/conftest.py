"""Shared test helpers for tests that need a real HTTP server process."""

from __future__ import annotations

import os
import socket
import subprocess
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import httpx

from pumplink.server.fixtures import make_fixture

SERVER_STARTUP_TIMEOUT_S = 20.0


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def wait_until_up(url: str, proc: subprocess.Popen, timeout_s: float = SERVER_STARTUP_TIMEOUT_S) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if proc.poll() is not None:
            raise RuntimeError(f"server process exited early with code {proc.returncode}")
        try:
            if httpx.get(f"{url}/healthz", timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.05)
    raise RuntimeError(f"server at {url} did not come up within {timeout_s}s")


@contextmanager
def live_server(
    n_patients: int = 2,
    kdf_mode: str = "fast",
    env_overrides: dict | None = None,
):
    """A real server subprocess seeded with ``n_patients`` demo accounts.

    Yields (base_url, process). ``kdf_mode`` "fast" keeps logins cheap for
    functional tests; pass "interactive" when login cost is the point of
    the test. Extra PUMPLINK_* settings go in ``env_overrides``.
    """
    with tempfile.TemporaryDirectory() as td:
        fixture_path = Path(td) / "fixture.json"
        make_fixture(n_patients).save(fixture_path)
        port = free_port()
        env = dict(os.environ, PUMPLINK_KDF_MODE=kdf_mode)
        if env_overrides:
            env.update(env_overrides)
        proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "pumplink.server.main",
                "run",
                "--fixture",
                str(fixture_path),
                "--port",
                str(port),
                "--quiet",
            ],
            env=env,
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        url = f"http://127.0.0.1:{port}"
        try:
            wait_until_up(url, proc)
            yield url, proc
        finally:
            if proc.poll() is None:
                proc.terminate()
                try:
                    proc.wait(10)
                except subprocess.TimeoutExpired:
                    proc.kill()
                    proc.wait(5)
