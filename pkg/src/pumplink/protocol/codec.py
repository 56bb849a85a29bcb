"""JSON codec for the wire messages.

Encoding is canonical (sorted keys, compact separators, UTF-8) so encoded
bytes are stable and usable as golden fixtures. Decoding is strict: an
unknown field, a missing field, a wrong type or a non-canonical MAC all
raise Malformed.
"""

from __future__ import annotations

import json
from decimal import Decimal
from typing import Any, Callable, Dict, Tuple, Type, TypeVar

from pumplink.protocol.types import (
    ApiError,
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
    as_decimal_2dp,
)

M = TypeVar("M")


def _malformed(msg: str) -> ApiError:
    return ApiError(ErrorCode.MALFORMED, msg)


def _as_obj(data: bytes) -> dict:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise _malformed(f"invalid JSON body: {e}")
    if not isinstance(obj, dict):
        raise _malformed("body must be a JSON object")
    return obj


def _check_fields(obj: dict, required: Tuple[str, ...]) -> None:
    missing = [k for k in required if k not in obj]
    if missing:
        raise _malformed(f"missing field(s): {', '.join(missing)}")
    extra = [k for k in obj if k not in required]
    if extra:
        raise _malformed(f"unexpected field(s): {', '.join(extra)}")


def _str(obj: dict, key: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise _malformed(f"{key} must be a string")
    return v


def _bool(obj: dict, key: str) -> bool:
    v = obj[key]
    if not isinstance(v, bool):
        raise _malformed(f"{key} must be a boolean")
    return v


def _int(obj: dict, key: str) -> int:
    v = obj[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise _malformed(f"{key} must be an integer")
    return v


def _dec(obj: dict, key: str) -> Decimal:
    try:
        return as_decimal_2dp(obj[key], key)
    except ValueError as e:
        raise _malformed(str(e))


def _mac(obj: dict, key: str) -> MacAddress:
    v = obj[key]
    if not isinstance(v, str):
        raise _malformed(f"{key} must be a string")
    try:
        return MacAddress.parse(v)
    except ValueError as e:
        raise _malformed(str(e))


def _num(value: Decimal) -> float:
    # 2dp decimals convert to the nearest float, whose shortest repr is the
    # same decimal text again, so the wire stays exact.
    return float(value)


def _index_wire(index: InfusionIndex) -> dict:
    return {
        "volume_ml": _num(index.volume_ml),
        "rate_ml_h": _num(index.rate_ml_h),
        "version": index.version,
    }


def _index_from(obj: Any, key: str = "index") -> InfusionIndex:
    if not isinstance(obj, dict):
        raise _malformed(f"{key} must be an object")
    _check_fields(obj, ("volume_ml", "rate_ml_h", "version"))
    try:
        return InfusionIndex(
            volume_ml=_dec(obj, "volume_ml"),
            rate_ml_h=_dec(obj, "rate_ml_h"),
            version=_int(obj, "version"),
        )
    except ValueError as e:
        raise _malformed(str(e))


# --- per-type encoders and decoders --------------------------------------


def _enc_login_req(m: LoginRequest) -> dict:
    return {"username": m.username, "password": m.password, "mac": m.mac.text}


def _dec_login_req(obj: dict) -> LoginRequest:
    _check_fields(obj, ("username", "password", "mac"))
    return LoginRequest(_str(obj, "username"), _str(obj, "password"), _mac(obj, "mac"))


def _enc_login_resp(m: LoginResponse) -> dict:
    return {
        "first_name": m.first_name,
        "last_name": m.last_name,
        "institution": m.institution,
        "token": m.token,
    }


def _dec_login_resp(obj: dict) -> LoginResponse:
    _check_fields(obj, ("first_name", "last_name", "institution", "token"))
    return LoginResponse(
        _str(obj, "first_name"),
        _str(obj, "last_name"),
        _str(obj, "institution"),
        _str(obj, "token"),
    )


def _enc_index_req(m: IndexRequest) -> dict:
    return {"token": m.token, "patient_id": m.patient_id, "mac": m.mac.text}


def _dec_index_req(obj: dict) -> IndexRequest:
    _check_fields(obj, ("token", "patient_id", "mac"))
    return IndexRequest(_str(obj, "token"), _str(obj, "patient_id"), _mac(obj, "mac"))


def _enc_index_resp(m: IndexResponse) -> dict:
    return {"index": _index_wire(m.index), "token": m.token}


def _dec_index_resp(obj: dict) -> IndexResponse:
    _check_fields(obj, ("index", "token"))
    return IndexResponse(_index_from(obj["index"]), _str(obj, "token"))


def _enc_set_index_req(m: SetIndexRequest) -> dict:
    return {"volume_ml": _num(m.volume_ml), "rate_ml_h": _num(m.rate_ml_h)}


def _dec_set_index_req(obj: dict) -> SetIndexRequest:
    _check_fields(obj, ("volume_ml", "rate_ml_h"))
    return SetIndexRequest(_dec(obj, "volume_ml"), _dec(obj, "rate_ml_h"))


def _enc_set_index_resp(m: SetIndexResponse) -> dict:
    return {"index": _index_wire(m.index)}


def _dec_set_index_resp(obj: dict) -> SetIndexResponse:
    _check_fields(obj, ("index",))
    return SetIndexResponse(_index_from(obj["index"]))


def _enc_proposal_req(m: ProposalRequest) -> dict:
    return {"volume_ml": _num(m.volume_ml), "rate_ml_h": _num(m.rate_ml_h)}


def _dec_proposal_req(obj: dict) -> ProposalRequest:
    _check_fields(obj, ("volume_ml", "rate_ml_h"))
    return ProposalRequest(_dec(obj, "volume_ml"), _dec(obj, "rate_ml_h"))


def _enc_proposal_ack(m: ProposalAck) -> dict:
    return {"volume_ml": _num(m.volume_ml), "rate_ml_h": _num(m.rate_ml_h)}


def _dec_proposal_ack(obj: dict) -> ProposalAck:
    _check_fields(obj, ("volume_ml", "rate_ml_h"))
    return ProposalAck(_dec(obj, "volume_ml"), _dec(obj, "rate_ml_h"))


def _enc_resolve_req(m: ResolveRequest) -> dict:
    return {"approve": m.approve}


def _dec_resolve_req(obj: dict) -> ResolveRequest:
    _check_fields(obj, ("approve",))
    return ResolveRequest(_bool(obj, "approve"))


def _enc_resolve_resp(m: ResolveResponse) -> dict:
    return {
        "outcome": m.outcome,
        "index": _index_wire(m.index) if m.index is not None else None,
    }


def _dec_resolve_resp(obj: dict) -> ResolveResponse:
    _check_fields(obj, ("outcome", "index"))
    index = obj["index"]
    try:
        return ResolveResponse(
            outcome=_str(obj, "outcome"),
            index=_index_from(index) if index is not None else None,
        )
    except ValueError as e:
        raise _malformed(str(e))


def _json_clean(value: Any, key: str) -> Any:
    """Reject payload values json cannot represent losslessly."""
    if isinstance(value, (str, bool, int, float)) or value is None:
        return value
    if isinstance(value, Decimal):
        return float(value)
    if isinstance(value, dict):
        return {k: _json_clean(v, k) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_clean(v, key) for v in value]
    raise _malformed(f"payload value for {key!r} is not JSON-representable")


def _enc_event_report(m: EventReport) -> dict:
    return {
        "token": m.token,
        "patient_id": m.patient_id,
        "mac": m.mac.text,
        "event": m.event,
        "payload": _json_clean(m.payload, "payload"),
    }


def _dec_event_report(obj: dict) -> EventReport:
    _check_fields(obj, ("token", "patient_id", "mac", "event", "payload"))
    payload = obj["payload"]
    if not isinstance(payload, dict):
        raise _malformed("payload must be an object")
    try:
        return EventReport(
            token=_str(obj, "token"),
            patient_id=_str(obj, "patient_id"),
            mac=_mac(obj, "mac"),
            event=_str(obj, "event"),
            payload=payload,
        )
    except ValueError as e:
        raise _malformed(str(e))


def _enc_event_ack(m: EventAck) -> dict:
    return {"ok": m.ok, "token": m.token}


def _dec_event_ack(obj: dict) -> EventAck:
    _check_fields(obj, ("ok", "token"))
    return EventAck(_bool(obj, "ok"), _str(obj, "token"))


_Encoder = Callable[[Any], dict]
_Decoder = Callable[[dict], Any]

_REGISTRY: Dict[type, Tuple[_Encoder, _Decoder]] = {
    LoginRequest: (_enc_login_req, _dec_login_req),
    LoginResponse: (_enc_login_resp, _dec_login_resp),
    IndexRequest: (_enc_index_req, _dec_index_req),
    IndexResponse: (_enc_index_resp, _dec_index_resp),
    SetIndexRequest: (_enc_set_index_req, _dec_set_index_req),
    SetIndexResponse: (_enc_set_index_resp, _dec_set_index_resp),
    ProposalRequest: (_enc_proposal_req, _dec_proposal_req),
    ProposalAck: (_enc_proposal_ack, _dec_proposal_ack),
    ResolveRequest: (_enc_resolve_req, _dec_resolve_req),
    ResolveResponse: (_enc_resolve_resp, _dec_resolve_resp),
    EventReport: (_enc_event_report, _dec_event_report),
    EventAck: (_enc_event_ack, _dec_event_ack),
}


def dumps_canonical(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_message(msg: Any) -> bytes:
    """Canonical JSON bytes for any registered message type."""
    try:
        enc, _ = _REGISTRY[type(msg)]
    except KeyError:
        raise TypeError(f"not a wire message type: {type(msg).__name__}")
    return dumps_canonical(enc(msg))


def decode_message(data: bytes, msg_type: Type[M]) -> M:
    """Strict decode; raises ApiError(Malformed) on any schema violation."""
    try:
        _, dec = _REGISTRY[msg_type]
    except KeyError:
        raise TypeError(f"not a wire message type: {msg_type.__name__}")
    return dec(_as_obj(data))


def error_body(err: ApiError) -> bytes:
    return dumps_canonical({"error": err.code.value, "message": err.message})


def parse_error(data: bytes) -> ApiError:
    """Reconstruct an ApiError from a response body."""
    obj = _as_obj(data)
    _check_fields(obj, ("error", "message"))
    code_text = _str(obj, "error")
    try:
        code = ErrorCode(code_text)
    except ValueError:
        raise _malformed(f"unknown error code: {code_text!r}")
    return ApiError(code, _str(obj, "message"))
