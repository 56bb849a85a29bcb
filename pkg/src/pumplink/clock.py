"""Injectable clocks.

Nothing in the stack reads the wall clock directly: the server core, token
store and pump simulator all take a clock object so that expiry and timing
behaviour is deterministic under test. ``VirtualClock`` in accelerated mode
never sleeps, which is what lets an hour-long infusion finish in seconds.
"""

from __future__ import annotations

import time


class SystemClock:
    """Wall-clock time, used by live server and realtime pump runs."""

    def now(self) -> float:
        """Current time in seconds (epoch-based)."""
        return time.time()

    def sleep_until(self, t: float) -> None:
        delta = t - self.now()
        if delta > 0:
            time.sleep(delta)


class VirtualClock:
    """Simulated clock advanced explicitly by the event loop driving it.

    mode "accelerated" ignores wall time entirely; mode "realtime" sleeps
    real seconds scaled by ``speedup`` (speedup 2.0 runs twice as fast).
    """

    def __init__(self, start: float = 0.0, mode: str = "accelerated", speedup: float = 1.0):
        if mode not in ("accelerated", "realtime"):
            raise ValueError(f"unknown clock mode: {mode}")
        if speedup <= 0:
            raise ValueError("speedup must be positive")
        self._now = float(start)
        self.mode = mode
        self.speedup = speedup

    def now(self) -> float:
        return self._now

    def advance_to(self, t: float) -> None:
        """Move time forward to t. Time never moves backwards."""
        if t < self._now:
            return
        if self.mode == "realtime":
            time.sleep((t - self._now) / self.speedup)
        self._now = t

    def advance(self, dt: float) -> None:
        self.advance_to(self._now + dt)

    def sleep_until(self, t: float) -> None:
        self.advance_to(t)
