"""Wire-level message types, token semantics and error codes shared by the
server, the pump simulator, the evaluation harness and the console."""

from pumplink.protocol.types import (
    ApiError,
    Credentials,
    ErrorCode,
    EventAck,
    EventReport,
    IndexRequest,
    IndexResponse,
    InfusionIndex,
    LoginRequest,
    LoginResponse,
    MacAddress,
    ProposalAck,
    ProposalRequest,
    ResolveRequest,
    ResolveResponse,
    SetIndexRequest,
    SetIndexResponse,
    RATE_MAX_ML_H,
    RATE_MIN_ML_H,
    Token,
    TokenKind,
    as_decimal_2dp,
    generate_token,
    status_for,
)
from pumplink.protocol.codec import (
    decode_message,
    dumps_canonical,
    encode_message,
    error_body,
    parse_error,
)

__all__ = [
    "ApiError",
    "Credentials",
    "ErrorCode",
    "EventAck",
    "EventReport",
    "IndexRequest",
    "IndexResponse",
    "InfusionIndex",
    "LoginRequest",
    "LoginResponse",
    "MacAddress",
    "ProposalAck",
    "ProposalRequest",
    "ResolveRequest",
    "ResolveResponse",
    "SetIndexRequest",
    "SetIndexResponse",
    "RATE_MAX_ML_H",
    "RATE_MIN_ML_H",
    "Token",
    "TokenKind",
    "as_decimal_2dp",
    "generate_token",
    "status_for",
    "decode_message",
    "dumps_canonical",
    "encode_message",
    "error_body",
    "parse_error",
]
