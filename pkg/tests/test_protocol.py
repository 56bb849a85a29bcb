"""Wire protocol: token semantics, MAC parsing, codec round trips."""

import json
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pumplink.protocol import (
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
    Token,
    TokenKind,
    decode_message,
    encode_message,
    error_body,
    generate_token,
    parse_error,
    status_for,
)


class TestToken:
    def test_expiry_boundaries(self):
        t0 = 1000.0
        tok = generate_token(TokenKind.LOGIN_ISSUED, t0, 60.0)
        assert not tok.expired(t0 + 59.0)
        assert tok.expired(t0 + 61.0)
        # boundary itself is still valid: expiry is strict
        assert not tok.expired(t0 + 60.0)

    def test_millisecond_ttl(self):
        tok = generate_token(TokenKind.INDEX_ISSUED, 500.0, 0.001)
        assert tok.expired(501.0)

    def test_bulk_distinctness(self):
        values = {generate_token(TokenKind.INDEX_ISSUED, 0.0, 60.0).value for _ in range(100_000)}
        assert len(values) == 100_000

    def test_value_shape(self):
        tok = generate_token(TokenKind.LOGIN_ISSUED, 0.0, 1.0)
        assert len(tok.value) == 32
        assert tok.value == tok.value.lower()
        int(tok.value, 16)  # hex

    def test_fresh_token_unconsumed(self):
        assert generate_token(TokenKind.LOGIN_ISSUED, 0.0, 1.0).consumed is False

    def test_consume_is_one_way(self):
        tok = generate_token(TokenKind.LOGIN_ISSUED, 0.0, 1.0)
        used = tok.consume()
        assert used.consumed is True
        assert used.consume().consumed is True

    def test_zero_ttl_rejected(self):
        with pytest.raises(ValueError):
            generate_token(TokenKind.LOGIN_ISSUED, 0.0, 0.0)

    @given(st.floats(min_value=0, max_value=1e9, allow_nan=False), st.floats(min_value=0.001, max_value=1e6))
    def test_expiry_pure_function(self, now, ttl):
        tok = Token("a" * 32, TokenKind.INDEX_ISSUED, issued_at_ms=0, ttl_s=ttl)
        assert tok.expired(now) == (now * 1000.0 > ttl * 1000.0)


class TestMacAddress:
    def test_parse_render_round_trip(self):
        m = MacAddress.parse("AA:BB:CC:DD:EE:01")
        assert m.text == "AA:BB:CC:DD:EE:01"
        assert MacAddress.parse(m.text) == m

    @pytest.mark.parametrize(
        "bad",
        [
            "aa:bb:cc:dd:ee:01",  # lowercase is non-canonical
            "AA:BB:CC:DD:EE",
            "AA:BB:CC:DD:EE:01:02",
            "AA-BB-CC-DD-EE-01",
            "AABBCCDDEE01",
            "GG:BB:CC:DD:EE:01",
            "",
        ],
    )
    def test_rejects_non_canonical(self, bad):
        with pytest.raises(ValueError):
            MacAddress.parse(bad)

    @given(st.binary(min_size=6, max_size=6))
    def test_render_parse_identity(self, octets):
        m = MacAddress(octets)
        assert MacAddress.parse(m.text) == m


class TestInfusionIndex:
    def test_rate_range_enforced(self):
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("5"), Decimal("250"), 1)
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("5"), Decimal("0.09"), 1)
        InfusionIndex(Decimal("5"), Decimal("0.1"), 1)
        InfusionIndex(Decimal("5"), Decimal("200"), 1)

    def test_volume_positive(self):
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("0"), Decimal("5"), 1)
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("-1"), Decimal("5"), 1)

    def test_two_decimal_limit(self):
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("2.005"), Decimal("4"), 1)
        idx = InfusionIndex(Decimal("2"), Decimal("4.25"), 3)
        assert idx.volume_ml == Decimal("2.00")
        assert idx.rate_ml_h == Decimal("4.25")

    def test_version_positive_int(self):
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("2"), Decimal("4"), 0)
        with pytest.raises(ValueError):
            InfusionIndex(Decimal("2"), Decimal("4"), True)


MAC = MacAddress.parse("AA:BB:CC:DD:EE:01")
TOK = "0123456789abcdef0123456789abcdef"


class TestCodecExamples:
    def test_login_request_round_trip(self):
        m = LoginRequest("alice", "pw", MAC)
        assert decode_message(encode_message(m), LoginRequest) == m

    def test_index_request_missing_patient_id(self):
        raw = json.dumps({"token": TOK, "mac": MAC.text}).encode()
        with pytest.raises(ApiError) as exc:
            decode_message(raw, IndexRequest)
        assert exc.value.code is ErrorCode.MALFORMED

    def test_index_response_exact_decimals(self):
        # first reference setting: 2 mL at 4 mL/h
        m = IndexResponse(InfusionIndex(Decimal("2.00"), Decimal("4.00"), 1), TOK)
        out = decode_message(encode_message(m), IndexResponse)
        assert out == m
        assert out.index.volume_ml == Decimal("2.00")
        assert out.index.rate_ml_h == Decimal("4.00")

    def test_extra_field_rejected(self):
        raw = json.dumps(
            {"username": "a", "password": "b", "mac": MAC.text, "debug": True}
        ).encode()
        with pytest.raises(ApiError) as exc:
            decode_message(raw, LoginRequest)
        assert exc.value.code is ErrorCode.MALFORMED

    def test_non_canonical_mac_rejected(self):
        raw = json.dumps({"username": "a", "password": "b", "mac": "aa:bb:cc:dd:ee:01"}).encode()
        with pytest.raises(ApiError):
            decode_message(raw, LoginRequest)

    def test_wrong_type_rejected(self):
        raw = json.dumps({"token": 7, "patient_id": "p", "mac": MAC.text}).encode()
        with pytest.raises(ApiError):
            decode_message(raw, IndexRequest)

    def test_not_an_object(self):
        with pytest.raises(ApiError):
            decode_message(b"[1,2]", LoginRequest)
        with pytest.raises(ApiError):
            decode_message(b"not json", LoginRequest)

    def test_three_decimal_rate_rejected(self):
        raw = json.dumps({"volume_ml": 2.0, "rate_ml_h": 4.005}).encode()
        with pytest.raises(ApiError):
            decode_message(raw, SetIndexRequest)

    def test_out_of_range_rate_decodes(self):
        # limits are a server concern; the codec only checks shape
        raw = json.dumps({"volume_ml": 5.0, "rate_ml_h": 250.0}).encode()
        m = decode_message(raw, SetIndexRequest)
        assert m.rate_ml_h == Decimal("250.00")

    def test_canonical_encoding_stable(self):
        m = LoginRequest("alice", "pw", MAC)
        assert encode_message(m) == encode_message(m)
        assert b'"mac":"AA:BB:CC:DD:EE:01"' in encode_message(m)

    def test_error_body_round_trip(self):
        err = ApiError(ErrorCode.TOKEN_CONSUMED, "token already used")
        back = parse_error(error_body(err))
        assert back.code is ErrorCode.TOKEN_CONSUMED
        assert back.message == "token already used"

    def test_status_mapping(self):
        assert status_for(ErrorCode.MALFORMED) == 400
        assert status_for(ErrorCode.BAD_CREDENTIALS) == 401
        assert status_for(ErrorCode.TOKEN_EXPIRED) == 401
        assert status_for(ErrorCode.TOKEN_CONSUMED) == 401
        assert status_for(ErrorCode.TOKEN_UNKNOWN) == 401
        assert status_for(ErrorCode.UNKNOWN_DEVICE) == 403
        assert status_for(ErrorCode.NOT_FOUND) == 404
        assert status_for(ErrorCode.LIMIT_VIOLATION) == 422


# --- property-based round trips ------------------------------------------

_text = st.text(min_size=1, max_size=40).filter(lambda s: s.strip() == s and s)
_tokens = st.binary(min_size=16, max_size=16).map(lambda b: b.hex())
_macs = st.binary(min_size=6, max_size=6).map(MacAddress)
_volumes = st.integers(min_value=1, max_value=100_000).map(lambda n: Decimal(n) / 100)
_rates = st.integers(min_value=10, max_value=20_000).map(lambda n: Decimal(n) / 100)
_versions = st.integers(min_value=1, max_value=10**9)
_indices = st.builds(InfusionIndex, volume_ml=_volumes, rate_ml_h=_rates, version=_versions)
_payloads = st.dictionaries(
    st.text(min_size=1, max_size=10),
    st.one_of(st.integers(-1000, 1000), st.floats(-1e6, 1e6), st.text(max_size=10), st.booleans()),
    max_size=4,
)

_messages = st.one_of(
    st.builds(LoginRequest, username=_text, password=_text, mac=_macs),
    st.builds(LoginResponse, first_name=_text, last_name=_text, institution=_text, token=_tokens),
    st.builds(IndexRequest, token=_tokens, patient_id=_text, mac=_macs),
    st.builds(IndexResponse, index=_indices, token=_tokens),
    st.builds(SetIndexRequest, volume_ml=_volumes, rate_ml_h=_rates),
    st.builds(SetIndexResponse, index=_indices),
    st.builds(ProposalRequest, volume_ml=_volumes, rate_ml_h=_rates),
    st.builds(ProposalAck, volume_ml=_volumes, rate_ml_h=_rates),
    st.builds(ResolveRequest, approve=st.booleans()),
    st.builds(ResolveResponse, outcome=st.just("approved"), index=_indices),
    st.builds(ResolveResponse, outcome=st.just("rejected"), index=st.none()),
    st.builds(EventReport, token=_tokens, patient_id=_text, mac=_macs,
              event=st.sampled_from(["started", "completed", "report"]), payload=_payloads),
    st.builds(EventAck, ok=st.booleans(), token=_tokens),
)


@settings(max_examples=300)
@given(_messages)
def test_codec_round_trip_property(msg):
    assert decode_message(encode_message(msg), type(msg)) == msg
