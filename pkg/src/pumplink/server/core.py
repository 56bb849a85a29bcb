"""Server core: accounts, profiles, token rules and every API operation.

Transport-independent; the FastAPI layer in ``app.py`` only decodes
requests, calls in here and maps ApiError codes to HTTP statuses. All
mutating paths are guarded: token consumption is atomic in the token
store, per-patient index changes serialize on a patient lock, and log
appends share one sequence lock.

Token rules implemented here:

* device path (pump): login issues a single-use login token; every index
  poll and event report consumes the presented token and returns a fresh
  single-use index token.
* console path (physician): login issues a session token that is
  time-expiring but exempt from single-use, since a browser cannot work
  through one-shot credentials. Session tokens are useless on the device
  APIs and device tokens are useless on the physician endpoints.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Optional

from pumplink.clock import SystemClock
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
    ResolveResponse,
    SetIndexResponse,
    TokenKind,
)
from pumplink.server.cache import ReadThroughCache
from pumplink.server.config import ServerConfig
from pumplink.server.fixtures import Fixture
from pumplink.server.passwords import PasswordHasher
from pumplink.server.storage import (
    InfusionLogEntry,
    LogEventType,
    index_to_payload,
    open_storage,
    rebuild_indices,
)
from pumplink.server.tokens import ConsumeResult, TokenStore

_DEVICE_KINDS = (TokenKind.LOGIN_ISSUED, TokenKind.INDEX_ISSUED)


class Role(str, Enum):
    PATIENT = "patient"
    PHYSICIAN = "physician"


@dataclass
class Account:
    username: str
    password_record: str
    role: Role
    first_name: str
    last_name: str
    institution: str
    registered_macs: frozenset[MacAddress]
    patient_id: Optional[str] = None


@dataclass(frozen=True)
class Limits:
    max_volume_ml: Decimal
    min_rate_ml_h: Decimal
    max_rate_ml_h: Decimal

    def __post_init__(self):
        if self.max_volume_ml <= 0:
            raise ValueError("max_volume_ml must be positive")
        if self.min_rate_ml_h < Decimal("0.1") or self.max_rate_ml_h > Decimal("200"):
            raise ValueError("profile rate limits must stay within 0.1..200 mL/h")
        if self.min_rate_ml_h > self.max_rate_ml_h:
            raise ValueError("min rate above max rate")


@dataclass(frozen=True)
class PendingProposal:
    volume_ml: Decimal
    rate_ml_h: Decimal


@dataclass
class InfusionRuntime:
    """What the server knows about the device's activity, for status views."""

    started_at_s: Optional[float] = None
    completed_at_s: Optional[float] = None
    reported_delivered_ml: Optional[float] = None
    # (t_s, rate mL/h) change points since the last start
    rate_changes: list[tuple[float, float]] = field(default_factory=list)
    last_served_at_s: Optional[float] = None


@dataclass
class PatientProfile:
    patient_id: str
    physician_username: str
    limits: Limits
    current_index: InfusionIndex
    pending_proposal: Optional[PendingProposal] = None
    runtime: InfusionRuntime = field(default_factory=InfusionRuntime)


class ServerCore:
    def __init__(
        self,
        config: ServerConfig,
        fixture: Fixture,
        clock=None,
        storage=None,
    ):
        self.config = config
        self.clock = clock if clock is not None else SystemClock()
        self.storage = storage if storage is not None else open_storage(config.storage_path)
        self.hasher = PasswordHasher(config.kdf_mode)
        self.tokens = TokenStore()
        self.cache: ReadThroughCache[InfusionIndex] = ReadThroughCache()

        self._accounts: dict[str, Account] = {}
        self._account_by_patient: dict[str, Account] = {}
        self._profiles: dict[str, PatientProfile] = {}
        self._log_lock = threading.Lock()
        self._patient_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._seq = 1

        self._load_fixture(fixture)
        self._restore_from_log()

    # --- startup ----------------------------------------------------------

    def _load_fixture(self, fixture: Fixture) -> None:
        for a in fixture.accounts:
            if a.username in self._accounts:
                raise ValueError(f"duplicate account username: {a.username}")
            account = Account(
                username=a.username,
                password_record=self.hasher.hash(a.password),
                role=Role(a.role),
                first_name=a.first_name,
                last_name=a.last_name,
                institution=a.institution,
                registered_macs=frozenset(MacAddress.parse(m) for m in a.macs),
                patient_id=a.patient_id,
            )
            self._accounts[a.username] = account
            if account.patient_id:
                self._account_by_patient[account.patient_id] = account
        for p in fixture.patients:
            if p.patient_id in self._profiles:
                raise ValueError(f"duplicate patient id: {p.patient_id}")
            if p.physician not in self._accounts:
                raise ValueError(f"patient {p.patient_id}: unknown physician {p.physician}")
            limits = Limits(p.max_volume_ml, p.min_rate_ml_h, p.max_rate_ml_h)
            initial = InfusionIndex(p.initial_volume_ml, p.initial_rate_ml_h, version=1)
            self._check_limits(limits, initial.volume_ml, initial.rate_ml_h)
            self._profiles[p.patient_id] = PatientProfile(
                patient_id=p.patient_id,
                physician_username=p.physician,
                limits=limits,
                current_index=initial,
            )

    def _restore_from_log(self) -> None:
        """Adopt replayed state where the log has history; otherwise record
        the initial prescription so the log is complete from entry one."""
        existing = self.storage.entries()
        replayed = rebuild_indices(existing)
        if existing:
            self._seq = max(e.seq for e in existing) + 1
        now = self.clock.now()
        for pid, profile in self._profiles.items():
            if pid in replayed:
                profile.current_index = replayed[pid]
            else:
                self._append_log(pid, LogEventType.INDEX_CHANGED,
                                 index_to_payload(profile.current_index), now)

    # --- internals --------------------------------------------------------

    def _patient_lock(self, patient_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._patient_locks.setdefault(patient_id, threading.Lock())

    def _append_log(self, patient_id: str, event: LogEventType, payload: dict, now: float) -> InfusionLogEntry:
        with self._log_lock:
            entry = InfusionLogEntry(
                seq=self._seq,
                t_ms=int(round(now * 1000.0)),
                patient_id=patient_id,
                event=event,
                payload=payload,
            )
            self._seq += 1
            self.storage.append(entry)
        return entry

    def _consume_or_raise(self, value: str, now: float) -> None:
        result = self.tokens.consume(value, now)
        if result is ConsumeResult.OK:
            return
        if result is ConsumeResult.EXPIRED:
            raise ApiError(ErrorCode.TOKEN_EXPIRED, "token expired; re-authenticate via the login API")
        if result is ConsumeResult.CONSUMED:
            raise ApiError(ErrorCode.TOKEN_CONSUMED, "single-use token was already spent")
        raise ApiError(ErrorCode.TOKEN_UNKNOWN, "token not recognized")

    def _device_context(self, token_value: str, patient_id: str, mac: MacAddress):
        """Validate everything that must hold before a device token may be
        spent. Raises without consuming, so failed checks mutate nothing."""
        rec = self.tokens.peek(token_value)
        if rec is None or rec.token.kind not in _DEVICE_KINDS:
            raise ApiError(ErrorCode.TOKEN_UNKNOWN, "token not recognized")
        account = self._accounts[rec.username]
        if mac not in account.registered_macs:
            raise ApiError(ErrorCode.UNKNOWN_DEVICE, f"device {mac} is not registered to this account")
        profile = self._profiles.get(patient_id)
        if profile is None or account.patient_id != patient_id:
            raise ApiError(ErrorCode.NOT_FOUND, f"no patient {patient_id!r} for this account")
        return rec, account, profile

    def _session_username(self, token_value: str, now: float) -> str:
        rec = self.tokens.peek(token_value)
        if rec is None or rec.token.kind is not TokenKind.SESSION_ISSUED:
            raise ApiError(ErrorCode.TOKEN_UNKNOWN, "no such session")
        if rec.token.expired(now):
            raise ApiError(ErrorCode.TOKEN_EXPIRED, "session expired")
        return rec.username

    def _physician_profile(self, session_token: str, patient_id: str, now: float) -> PatientProfile:
        username = self._session_username(session_token, now)
        profile = self._profiles.get(patient_id)
        if profile is None:
            raise ApiError(ErrorCode.NOT_FOUND, f"no patient {patient_id!r}")
        if profile.physician_username != username:
            raise ApiError(ErrorCode.BAD_CREDENTIALS, "not this patient's physician")
        return profile

    @staticmethod
    def _check_limits(limits: Limits, volume_ml: Decimal, rate_ml_h: Decimal) -> None:
        if volume_ml <= 0:
            raise ApiError(ErrorCode.LIMIT_VIOLATION, "volume must be positive")
        if volume_ml > limits.max_volume_ml:
            raise ApiError(
                ErrorCode.LIMIT_VIOLATION,
                f"volume {volume_ml} mL above profile maximum {limits.max_volume_ml} mL",
            )
        if not (limits.min_rate_ml_h <= rate_ml_h <= limits.max_rate_ml_h):
            raise ApiError(
                ErrorCode.LIMIT_VIOLATION,
                f"rate {rate_ml_h} mL/h outside profile range "
                f"{limits.min_rate_ml_h}..{limits.max_rate_ml_h} mL/h",
            )

    def _current_index(self, patient_id: str) -> InfusionIndex:
        profile = self._profiles[patient_id]
        return self.cache.get(patient_id, lambda: profile.current_index)

    def _accept_index(self, profile: PatientProfile, volume_ml: Decimal, rate_ml_h: Decimal,
                      event: LogEventType, now: float) -> InfusionIndex:
        """Caller holds the patient lock and has checked limits."""
        index = InfusionIndex(volume_ml, rate_ml_h, profile.current_index.version + 1)
        profile.current_index = index
        self.cache.invalidate(profile.patient_id)
        rt = profile.runtime
        if rt.started_at_s is not None and rt.completed_at_s is None:
            rt.rate_changes.append((now, float(rate_ml_h)))
        self._append_log(profile.patient_id, event, index_to_payload(index), now)
        return index

    # --- device APIs ------------------------------------------------------

    def handle_login(self, req: LoginRequest, now: Optional[float] = None) -> LoginResponse:
        now = self.clock.now() if now is None else now
        account = self._accounts.get(req.username)
        if account is None:
            self.hasher.burn()
            raise ApiError(ErrorCode.BAD_CREDENTIALS, "unknown username or wrong password")
        if not self.hasher.verify(req.password, account.password_record):
            raise ApiError(ErrorCode.BAD_CREDENTIALS, "unknown username or wrong password")
        if req.mac not in account.registered_macs:
            raise ApiError(ErrorCode.UNKNOWN_DEVICE, f"device {req.mac} is not registered to this account")
        if account.role is Role.PHYSICIAN:
            kind, ttl = TokenKind.SESSION_ISSUED, self.config.session_ttl_s
        else:
            kind, ttl = TokenKind.LOGIN_ISSUED, self.config.login_ttl_s
        token = self.tokens.issue(kind, now, ttl, account.username, account.patient_id)
        return LoginResponse(
            first_name=account.first_name,
            last_name=account.last_name,
            institution=account.institution,
            token=token.value,
        )

    def handle_index(self, req: IndexRequest, now: Optional[float] = None) -> IndexResponse:
        now = self.clock.now() if now is None else now
        rec, account, profile = self._device_context(req.token, req.patient_id, req.mac)
        self._consume_or_raise(req.token, now)
        index = self._current_index(req.patient_id)
        fresh = self.tokens.issue(
            TokenKind.INDEX_ISSUED, now, self.config.index_ttl_s, account.username, req.patient_id
        )
        profile.runtime.last_served_at_s = now
        self._append_log(req.patient_id, LogEventType.INDEX_SERVED, index_to_payload(index), now)
        return IndexResponse(index=index, token=fresh.value)

    def report_device_event(self, report: EventReport, now: Optional[float] = None) -> EventAck:
        now = self.clock.now() if now is None else now
        rec, account, profile = self._device_context(report.token, report.patient_id, report.mac)
        self._consume_or_raise(report.token, now)
        event = {
            "started": LogEventType.INFUSION_STARTED,
            "completed": LogEventType.INFUSION_COMPLETED,
            "report": LogEventType.DEVICE_REPORT,
        }[report.event]
        rt = profile.runtime
        if event is LogEventType.INFUSION_STARTED:
            rt.started_at_s = now
            rt.completed_at_s = None
            rt.reported_delivered_ml = None
            rt.rate_changes = [(now, float(profile.current_index.rate_ml_h))]
        elif event is LogEventType.INFUSION_COMPLETED:
            rt.completed_at_s = now
            delivered = report.payload.get("delivered_ml")
            if isinstance(delivered, (int, float)) and not isinstance(delivered, bool):
                rt.reported_delivered_ml = float(delivered)
        fresh = self.tokens.issue(
            TokenKind.INDEX_ISSUED, now, self.config.index_ttl_s, account.username, report.patient_id
        )
        self._append_log(report.patient_id, event, dict(report.payload), now)
        return EventAck(ok=True, token=fresh.value)

    # --- physician APIs ---------------------------------------------------

    def set_infusion_index(
        self,
        session_token: str,
        patient_id: str,
        volume_ml: Decimal,
        rate_ml_h: Decimal,
        now: Optional[float] = None,
    ) -> SetIndexResponse:
        now = self.clock.now() if now is None else now
        profile = self._physician_profile(session_token, patient_id, now)
        with self._patient_lock(patient_id):
            self._check_limits(profile.limits, volume_ml, rate_ml_h)
            index = self._accept_index(profile, volume_ml, rate_ml_h, LogEventType.INDEX_CHANGED, now)
        return SetIndexResponse(index=index)

    def propose_index(self, patient_id: str, volume_ml: Decimal, rate_ml_h: Decimal) -> ProposalAck:
        """Algorithm-facing: suggestions are parked for physician review and
        are not limit-checked until approval."""
        profile = self._profiles.get(patient_id)
        if profile is None:
            raise ApiError(ErrorCode.NOT_FOUND, f"no patient {patient_id!r}")
        with self._patient_lock(patient_id):
            profile.pending_proposal = PendingProposal(volume_ml, rate_ml_h)
        return ProposalAck(volume_ml=volume_ml, rate_ml_h=rate_ml_h)

    def resolve_proposal(
        self,
        session_token: str,
        patient_id: str,
        approve: bool,
        now: Optional[float] = None,
    ) -> ResolveResponse:
        now = self.clock.now() if now is None else now
        profile = self._physician_profile(session_token, patient_id, now)
        with self._patient_lock(patient_id):
            pending = profile.pending_proposal
            if pending is None:
                raise ApiError(ErrorCode.NOT_FOUND, "no pending proposal")
            if not approve:
                profile.pending_proposal = None
                self._append_log(
                    patient_id,
                    LogEventType.PROPOSAL_REJECTED,
                    {"volume_ml": float(pending.volume_ml), "rate_ml_h": float(pending.rate_ml_h)},
                    now,
                )
                return ResolveResponse(outcome="rejected", index=None)
            # an out-of-limits proposal stays pending so the physician can
            # see what was asked for after the rejection error
            self._check_limits(profile.limits, pending.volume_ml, pending.rate_ml_h)
            index = self._accept_index(
                profile, pending.volume_ml, pending.rate_ml_h, LogEventType.PROPOSAL_APPROVED, now
            )
            profile.pending_proposal = None
        return ResolveResponse(outcome="approved", index=index)

    def get_history(
        self,
        session_token: str,
        patient_id: str,
        t_from_ms: Optional[int] = None,
        t_to_ms: Optional[int] = None,
        now: Optional[float] = None,
    ) -> list[InfusionLogEntry]:
        now = self.clock.now() if now is None else now
        self._physician_profile(session_token, patient_id, now)
        entries = [
            e
            for e in self.storage.entries()
            if e.patient_id == patient_id
            and (t_from_ms is None or e.t_ms >= t_from_ms)
            and (t_to_ms is None or e.t_ms <= t_to_ms)
        ]
        entries.sort(key=lambda e: e.seq)
        return entries

    def get_status(self, session_token: str, patient_id: str, now: Optional[float] = None) -> dict:
        now = self.clock.now() if now is None else now
        profile = self._physician_profile(session_token, patient_id, now)
        return self._status_obj(profile, now)

    def list_patients(self, session_token: str, now: Optional[float] = None) -> list[dict]:
        now = self.clock.now() if now is None else now
        username = self._session_username(session_token, now)
        return [
            self._status_obj(p, now)
            for p in sorted(self._profiles.values(), key=lambda p: p.patient_id)
            if p.physician_username == username
        ]

    def _status_obj(self, profile: PatientProfile, now: float) -> dict:
        rt = profile.runtime
        index = profile.current_index
        account = self._account_by_patient.get(profile.patient_id)
        name = f"{account.first_name} {account.last_name}".strip() if account else profile.patient_id
        if rt.started_at_s is None:
            phase = "idle"
        elif rt.completed_at_s is None:
            phase = "infusing"
        else:
            phase = "completed"
        delivered = self._delivered_estimate(profile, now)
        volume = float(index.volume_ml)
        pct = max(0.0, min(1.0, delivered / volume)) if volume > 0 else 0.0
        return {
            "patient_id": profile.patient_id,
            "name": name,
            "phase": phase,
            "limits": {
                "max_volume_ml": float(profile.limits.max_volume_ml),
                "min_rate_ml_h": float(profile.limits.min_rate_ml_h),
                "max_rate_ml_h": float(profile.limits.max_rate_ml_h),
            },
            "index": index_to_payload(index),
            "pending_proposal": (
                {
                    "volume_ml": float(profile.pending_proposal.volume_ml),
                    "rate_ml_h": float(profile.pending_proposal.rate_ml_h),
                }
                if profile.pending_proposal
                else None
            ),
            "delivered_ml": round(delivered, 4),
            "pct_complete": round(pct, 4),
            "last_poll_age_s": (
                round(now - rt.last_served_at_s, 3) if rt.last_served_at_s is not None else None
            ),
        }

    def _delivered_estimate(self, profile: PatientProfile, now: float) -> float:
        """Integrate the served rate timeline; the device itself only
        reports start and completion, so mid-run progress is an estimate."""
        rt = profile.runtime
        if rt.started_at_s is None:
            return 0.0
        if rt.completed_at_s is not None and rt.reported_delivered_ml is not None:
            return rt.reported_delivered_ml
        end = rt.completed_at_s if rt.completed_at_s is not None else now
        total = 0.0
        changes = rt.rate_changes
        for i, (t, rate) in enumerate(changes):
            t_next = changes[i + 1][0] if i + 1 < len(changes) else end
            if t_next > t:
                total += rate * (t_next - t) / 3600.0
        return min(total, float(profile.current_index.volume_ml))

    # --- introspection (tests, tooling) -----------------------------------

    def current_index(self, patient_id: str) -> InfusionIndex:
        return self._profiles[patient_id].current_index

    def profile(self, patient_id: str) -> PatientProfile:
        return self._profiles[patient_id]

    def log_entries(self) -> list[InfusionLogEntry]:
        return self.storage.entries()

    def close(self) -> None:
        self.storage.close()
