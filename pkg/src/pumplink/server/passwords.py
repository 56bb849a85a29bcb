"""Password hashing with scrypt.

Records look like ``scrypt$16384$8$1$<salt hex>$<hash hex>``. The "fast"
mode exists for tests and load fixtures where hashing hundreds of seeded
accounts at interactive cost would dominate startup time.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets

_PARAMS = {
    "interactive": (16384, 8, 1),
    "fast": (4, 8, 1),
}

_MAXMEM = 64 * 1024 * 1024


class PasswordHasher:
    def __init__(self, mode: str = "interactive"):
        if mode not in _PARAMS:
            raise ValueError(f"unknown kdf mode: {mode!r} (expected one of {sorted(_PARAMS)})")
        self.mode = mode
        # fixed dummy record so failed lookups cost the same as failed matches
        self._dummy = self.hash("!" * 16)

    def hash(self, password: str) -> str:
        n, r, p = _PARAMS[self.mode]
        salt = secrets.token_bytes(16)
        digest = hashlib.scrypt(password.encode("utf-8"), salt=salt, n=n, r=r, p=p, maxmem=_MAXMEM)
        return f"scrypt${n}${r}${p}${salt.hex()}${digest.hex()}"

    def verify(self, password: str, record: str) -> bool:
        try:
            scheme, n, r, p, salt_hex, digest_hex = record.split("$")
            if scheme != "scrypt":
                return False
            digest = hashlib.scrypt(
                password.encode("utf-8"),
                salt=bytes.fromhex(salt_hex),
                n=int(n), r=int(r), p=int(p),
                maxmem=_MAXMEM,
            )
            return hmac.compare_digest(digest, bytes.fromhex(digest_hex))
        except (ValueError, TypeError):
            return False

    def burn(self) -> None:
        """Constant-cost dummy verification for unknown usernames."""
        self.verify("!" * 16, self._dummy)
