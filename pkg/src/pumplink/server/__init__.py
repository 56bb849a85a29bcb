"""Authentication and index server: login/index APIs with single-use
time-expiring tokens, MAC binding, physician endpoints and the append-only
infusion log."""

from pumplink.server.config import ServerConfig
from pumplink.server.core import ServerCore
from pumplink.server.app import create_app

__all__ = ["ServerConfig", "ServerCore", "create_app"]
