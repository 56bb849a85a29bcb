"""Domain types for the device protocol.

All types here are immutable values; mutable state (token consumption,
index versions) lives server-side. Volumes and rates are carried as
2-decimal quantities so the wire never accumulates float drift.
"""

from __future__ import annotations

import re
import secrets
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Optional

_TWO_DP = Decimal("0.01")

RATE_MIN_ML_H = Decimal("0.1")
RATE_MAX_ML_H = Decimal("200")


class ErrorCode(str, Enum):
    BAD_CREDENTIALS = "BadCredentials"
    UNKNOWN_DEVICE = "UnknownDevice"
    TOKEN_EXPIRED = "TokenExpired"
    TOKEN_CONSUMED = "TokenConsumed"
    TOKEN_UNKNOWN = "TokenUnknown"
    LIMIT_VIOLATION = "LimitViolation"
    NOT_FOUND = "NotFound"
    MALFORMED = "Malformed"


# One transport status per code.
_ERROR_STATUS = {
    ErrorCode.MALFORMED: 400,
    ErrorCode.BAD_CREDENTIALS: 401,
    ErrorCode.TOKEN_EXPIRED: 401,
    ErrorCode.TOKEN_CONSUMED: 401,
    ErrorCode.TOKEN_UNKNOWN: 401,
    ErrorCode.UNKNOWN_DEVICE: 403,
    ErrorCode.NOT_FOUND: 404,
    ErrorCode.LIMIT_VIOLATION: 422,
}


def status_for(code: ErrorCode) -> int:
    return _ERROR_STATUS[code]


class ApiError(Exception):
    """Protocol-level failure carried across the wire as {error, message}."""

    def __init__(self, code: ErrorCode, message: str = ""):
        super().__init__(f"{code.value}: {message}" if message else code.value)
        self.code = code
        self.message = message

    @property
    def status(self) -> int:
        return status_for(self.code)


def _malformed(msg: str) -> ApiError:
    return ApiError(ErrorCode.MALFORMED, msg)


def as_decimal_2dp(value, what: str) -> Decimal:
    """Coerce to a Decimal with at most two fractional digits.

    Accepts int, Decimal, float and numeric strings; floats go through str()
    so a JSON 4.1 arrives as Decimal("4.1"), not its binary expansion.
    """
    if isinstance(value, bool):
        raise ValueError(f"{what} must be a number")
    if isinstance(value, Decimal):
        dec = value
    elif isinstance(value, int):
        dec = Decimal(value)
    elif isinstance(value, float):
        dec = Decimal(str(value))
    elif isinstance(value, str):
        try:
            dec = Decimal(value)
        except InvalidOperation:
            raise ValueError(f"{what} is not numeric: {value!r}")
    else:
        raise ValueError(f"{what} must be a number, got {type(value).__name__}")
    if not dec.is_finite():
        raise ValueError(f"{what} must be finite")
    if -dec.as_tuple().exponent > 2:
        raise ValueError(f"{what} has more than 2 decimal places: {dec}")
    return dec.quantize(_TWO_DP)


_MAC_RE = re.compile(r"^([0-9A-F]{2}:){5}[0-9A-F]{2}$")


@dataclass(frozen=True)
class MacAddress:
    """Six-octet hardware address; canonical text form AA:BB:CC:DD:EE:FF."""

    octets: bytes

    def __post_init__(self):
        if not isinstance(self.octets, bytes) or len(self.octets) != 6:
            raise ValueError("MAC address must be exactly 6 octets")

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        """Strict parse of the canonical 17-char uppercase form."""
        if not isinstance(text, str) or not _MAC_RE.match(text):
            raise ValueError(f"not a canonical MAC address: {text!r}")
        return cls(bytes(int(part, 16) for part in text.split(":")))

    @property
    def text(self) -> str:
        return ":".join(f"{b:02X}" for b in self.octets)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Credentials:
    username: str
    password: str

    def __post_init__(self):
        if not self.username or len(self.username) > 64:
            raise ValueError("username must be non-empty and at most 64 chars")
        if not self.password or len(self.password) > 128:
            raise ValueError("password must be non-empty and at most 128 chars")


class TokenKind(str, Enum):
    LOGIN_ISSUED = "login"
    INDEX_ISSUED = "index"
    # Issued to console users; exempt from single-use, see server docs.
    SESSION_ISSUED = "session"


@dataclass(frozen=True)
class Token:
    """Single-use, time-expiring credential.

    ``value`` is 128 random bits as 32 lowercase hex chars. With n tokens
    the collision probability is about n^2 / 2^129: at a million issued
    tokens that is ~4e-27, so values are unique for any realistic run.
    """

    value: str
    kind: TokenKind
    issued_at_ms: int
    ttl_s: float
    consumed: bool = False

    def __post_init__(self):
        if not re.fullmatch(r"[0-9a-f]{32}", self.value):
            raise ValueError("token value must be 32 lowercase hex chars")
        if self.ttl_s <= 0:
            raise ValueError("token ttl must be positive")

    def expired(self, now_s: float) -> bool:
        """Pure expiry predicate; the caller supplies the clock reading."""
        return now_s * 1000.0 > self.issued_at_ms + self.ttl_s * 1000.0

    def consume(self) -> "Token":
        """Consumed copy; consumption never reverts."""
        return replace(self, consumed=True)


def generate_token(kind: TokenKind, now_s: float, ttl_s: float) -> Token:
    """Fresh unconsumed token drawn from the OS CSPRNG."""
    if ttl_s <= 0:
        raise ValueError("ttl must be positive")
    return Token(
        value=secrets.token_hex(16),
        kind=kind,
        issued_at_ms=int(round(now_s * 1000.0)),
        ttl_s=float(ttl_s),
    )


@dataclass(frozen=True)
class InfusionIndex:
    """Prescribed (volume, rate) pair plus its acceptance version."""

    volume_ml: Decimal
    rate_ml_h: Decimal
    version: int

    def __post_init__(self):
        object.__setattr__(self, "volume_ml", as_decimal_2dp(self.volume_ml, "volume_ml"))
        object.__setattr__(self, "rate_ml_h", as_decimal_2dp(self.rate_ml_h, "rate_ml_h"))
        if self.volume_ml <= 0:
            raise ValueError("volume must be positive")
        if not (RATE_MIN_ML_H <= self.rate_ml_h <= RATE_MAX_ML_H):
            raise ValueError(f"rate {self.rate_ml_h} outside [{RATE_MIN_ML_H}, {RATE_MAX_ML_H}] mL/h")
        if not isinstance(self.version, int) or isinstance(self.version, bool) or self.version < 1:
            raise ValueError("version must be a positive integer")


# --- wire messages -------------------------------------------------------
#
# Field names on the wire: username, password, mac, first_name, last_name,
# institution, token, patient_id, volume_ml, rate_ml_h, version.


@dataclass(frozen=True)
class LoginRequest:
    username: str
    password: str
    mac: MacAddress


@dataclass(frozen=True)
class LoginResponse:
    """Exactly the four login response parameters, nothing more."""

    first_name: str
    last_name: str
    institution: str
    token: str


@dataclass(frozen=True)
class IndexRequest:
    token: str
    patient_id: str
    mac: MacAddress


@dataclass(frozen=True)
class IndexResponse:
    index: InfusionIndex
    token: str


@dataclass(frozen=True)
class SetIndexRequest:
    """Physician push of a new prescription; limits are checked server-side
    so out-of-range values surface as LimitViolation, not Malformed."""

    volume_ml: Decimal
    rate_ml_h: Decimal

    def __post_init__(self):
        object.__setattr__(self, "volume_ml", as_decimal_2dp(self.volume_ml, "volume_ml"))
        object.__setattr__(self, "rate_ml_h", as_decimal_2dp(self.rate_ml_h, "rate_ml_h"))


@dataclass(frozen=True)
class SetIndexResponse:
    index: InfusionIndex


@dataclass(frozen=True)
class ProposalRequest:
    """Algorithm-suggested adjustment awaiting physician resolution."""

    volume_ml: Decimal
    rate_ml_h: Decimal

    def __post_init__(self):
        object.__setattr__(self, "volume_ml", as_decimal_2dp(self.volume_ml, "volume_ml"))
        object.__setattr__(self, "rate_ml_h", as_decimal_2dp(self.rate_ml_h, "rate_ml_h"))


@dataclass(frozen=True)
class ProposalAck:
    volume_ml: Decimal
    rate_ml_h: Decimal

    def __post_init__(self):
        object.__setattr__(self, "volume_ml", as_decimal_2dp(self.volume_ml, "volume_ml"))
        object.__setattr__(self, "rate_ml_h", as_decimal_2dp(self.rate_ml_h, "rate_ml_h"))


@dataclass(frozen=True)
class ResolveRequest:
    approve: bool


@dataclass(frozen=True)
class ResolveResponse:
    outcome: str  # "approved" | "rejected"
    index: Optional[InfusionIndex] = None

    def __post_init__(self):
        if self.outcome not in ("approved", "rejected"):
            raise ValueError(f"outcome must be approved/rejected, got {self.outcome!r}")
        if (self.outcome == "approved") != (self.index is not None):
            raise ValueError("approved outcome carries the accepted index, rejected carries none")


EVENT_KINDS = ("started", "completed", "report")


# Not frozen: the payload dict is inherently mutable, so value semantics
# stop at field equality here.
@dataclass
class EventReport:
    """Device-side infusion event; payload is a free-form JSON object
    (index snapshot for start, delivered volume for completion)."""

    token: str
    patient_id: str
    mac: MacAddress
    event: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.event not in EVENT_KINDS:
            raise ValueError(f"event must be one of {EVENT_KINDS}, got {self.event!r}")
        if not isinstance(self.payload, dict):
            raise ValueError("payload must be a JSON object")


@dataclass(frozen=True)
class EventAck:
    ok: bool
    token: str
