"""Server-side token registry.

The consume operation is the security kernel: under any interleaving of
concurrent calls on one value, exactly one caller wins. Everything is
guarded by a single lock; at desk scale the registry is small and the
critical section is a few dict operations.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from pumplink.protocol import Token, TokenKind, generate_token


class ConsumeResult(Enum):
    OK = "ok"
    UNKNOWN = "unknown"
    CONSUMED = "consumed"
    EXPIRED = "expired"


@dataclass
class TokenRecord:
    token: Token
    username: str
    patient_id: Optional[str]
    consumed: bool = False


class TokenStore:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: dict[str, TokenRecord] = {}

    def issue(
        self,
        kind: TokenKind,
        now_s: float,
        ttl_s: float,
        username: str,
        patient_id: Optional[str] = None,
    ) -> Token:
        token = generate_token(kind, now_s, ttl_s)
        with self._lock:
            # 128-bit values collide with negligible probability; an actual
            # collision would indicate a broken RNG, so fail loudly.
            if token.value in self._records:
                raise RuntimeError("token value collision")
            self._records[token.value] = TokenRecord(token, username, patient_id)
        return token

    def peek(self, value: str) -> Optional[TokenRecord]:
        """Read-only lookup; never changes consumption state."""
        with self._lock:
            return self._records.get(value)

    def consume(self, value: str, now_s: float) -> ConsumeResult:
        """Atomically spend a token. Expiry dominates consumption state."""
        with self._lock:
            rec = self._records.get(value)
            if rec is None:
                return ConsumeResult.UNKNOWN
            if rec.token.expired(now_s):
                return ConsumeResult.EXPIRED
            if rec.consumed:
                return ConsumeResult.CONSUMED
            rec.consumed = True
            return ConsumeResult.OK

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)
