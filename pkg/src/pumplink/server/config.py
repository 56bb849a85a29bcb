"""Server configuration: JSON file plus PUMPLINK_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

DEFAULT_LOGIN_TTL_S = 60.0
DEFAULT_INDEX_TTL_S = 300.0
DEFAULT_SESSION_TTL_S = 1800.0


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8470
    login_ttl_s: float = DEFAULT_LOGIN_TTL_S
    index_ttl_s: float = DEFAULT_INDEX_TTL_S
    session_ttl_s: float = DEFAULT_SESSION_TTL_S
    kdf_mode: str = "interactive"
    storage_path: Optional[str] = None  # None keeps the log in memory
    fixture_path: Optional[str] = None

    def __post_init__(self):
        for name in ("login_ttl_s", "index_ttl_s", "session_ttl_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def load(cls, path: Optional[str | Path] = None, env: Optional[dict] = None) -> "ServerConfig":
        """Config file first, then environment variables on top."""
        values: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text())
            if not isinstance(raw, dict):
                raise ValueError(f"{path}: config must be a JSON object")
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"{path}: unknown config key(s): {', '.join(sorted(unknown))}")
            values.update(raw)
        env = os.environ if env is None else env
        for f in fields(cls):
            var = f"PUMPLINK_{f.name.upper()}"
            if var in env:
                text = env[var]
                if f.type in ("int", int):
                    values[f.name] = int(text)
                elif f.type in ("float", float):
                    values[f.name] = float(text)
                else:
                    values[f.name] = text
        return cls(**values)
