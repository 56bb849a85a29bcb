"""Read-through cache for current prescriptions.

Requests from the pump hit this cache; misses fall through to the loader
and fill the entry. Any index mutation invalidates synchronously, so the
pump can never be served an index older than the last accepted change.
"""

from __future__ import annotations

import threading
from typing import Callable, Generic, TypeVar

V = TypeVar("V")


class ReadThroughCache(Generic[V]):
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._data: dict[str, V] = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: str, loader: Callable[[], V]) -> V:
        # Loader runs inside the lock so an invalidation cannot interleave
        # between load and fill, which would pin a stale value.
        with self._lock:
            if key in self._data:
                self.hits += 1
                return self._data[key]
            self.misses += 1
            value = loader()
            self._data[key] = value
            return value

    def invalidate(self, key: str) -> None:
        with self._lock:
            self._data.pop(key, None)
