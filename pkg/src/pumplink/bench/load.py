"""Closed-loop HTTP load generator.

Each virtual user is a thread with its own connection, looping through
one login followed by a burst of index polls, thinking between requests.
Workers collect samples locally and the results are merged and
time-ordered after the run, so sampling adds no cross-thread contention
to the thing being measured.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from typing import Optional

import httpx

from pumplink.bench.metrics import RequestSample
from pumplink.server.fixtures import DEMO_PASSWORD, device_mac

_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class LoadProfile:
    n_users: int
    duration_s: float
    think_time_s: float = 1.0
    # fraction of requests that are logins; the remainder are index polls
    # chained on the returned tokens (0.2 = one login then four polls)
    login_fraction: float = 0.2

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("need at least one user")
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.think_time_s < 0:
            raise ValueError("think time cannot be negative")
        if not (0 < self.login_fraction <= 1):
            raise ValueError("login_fraction must be in (0, 1]")

    @property
    def polls_per_login(self) -> int:
        return max(0, round((1.0 - self.login_fraction) / self.login_fraction))


@dataclass(frozen=True)
class LoadResult:
    samples: list[RequestSample]
    elapsed_s: float  # first request sent to last response received


class _User:
    def __init__(self, index: int, base_url: str, profile: LoadProfile, t0: float):
        self.n = index + 1
        self.base_url = base_url
        self.profile = profile
        self.t0 = t0
        self.samples: list[RequestSample] = []

    def _timed_post(self, client: httpx.Client, path: str, body: dict) -> Optional[dict]:
        started = time.perf_counter()
        try:
            r = client.post(path, content=json.dumps(body).encode())
        except httpx.HTTPError:
            latency = (time.perf_counter() - started) * 1000.0
            self.samples.append(
                RequestSample((started - self.t0) * 1000.0, latency, path, "transport_error")
            )
            return None
        latency = (time.perf_counter() - started) * 1000.0
        if r.status_code == 200:
            outcome, payload = "ok", r.json()
        else:
            try:
                outcome = r.json().get("error", f"http_{r.status_code}")
            except ValueError:
                outcome = f"http_{r.status_code}"
            payload = None
        self.samples.append(RequestSample((started - self.t0) * 1000.0, latency, path, outcome))
        return payload

    def run(self, deadline: float) -> None:
        username = f"patient{self.n:03d}"
        patient_id = f"p{self.n:03d}"
        mac = device_mac(self.n)
        think = self.profile.think_time_s
        # spread start instants across one think period so the closed loop
        # does not pulse in lockstep
        time.sleep(think * ((self.n - 1) % 97) / 97.0)
        with httpx.Client(base_url=self.base_url, timeout=_TIMEOUT_S) as client:
            while time.perf_counter() < deadline:
                body = {"username": username, "password": DEMO_PASSWORD, "mac": mac}
                resp = self._timed_post(client, "/api/login", body)
                token = resp["token"] if resp else None
                polls_left = self.profile.polls_per_login
                while token and polls_left > 0 and time.perf_counter() < deadline:
                    if think:
                        time.sleep(think)
                    resp = self._timed_post(
                        client,
                        "/api/index",
                        {"token": token, "patient_id": patient_id, "mac": mac},
                    )
                    token = resp["token"] if resp else None
                    polls_left -= 1
                if think:
                    time.sleep(think)


def run_load_test(profile: LoadProfile, server_url: str) -> LoadResult:
    """Drive the server with ``profile.n_users`` concurrent users.

    Aborts with ConnectionError if the server is unreachable at start;
    mid-run failures surface as error-outcome samples, never exceptions.
    """
    try:
        r = httpx.get(f"{server_url}/healthz", timeout=5.0)
        r.raise_for_status()
    except httpx.HTTPError as e:
        raise ConnectionError(f"server not reachable at {server_url}: {e}")

    t0 = time.perf_counter()
    deadline = t0 + profile.duration_s
    users = [_User(i, server_url, profile, t0) for i in range(profile.n_users)]
    threads = [
        threading.Thread(target=u.run, args=(deadline,), name=f"vuser-{u.n}") for u in users
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    samples: list[RequestSample] = []
    for u in users:
        samples.extend(u.samples)
    samples.sort(key=lambda s: s.sent_at_ms)
    if samples:
        first_sent = samples[0].sent_at_ms
        last_response = max(s.sent_at_ms + s.latency_ms for s in samples)
        elapsed_s = (last_response - first_sent) / 1000.0
    else:
        elapsed_s = 0.0
    return LoadResult(samples=samples, elapsed_s=elapsed_s)
