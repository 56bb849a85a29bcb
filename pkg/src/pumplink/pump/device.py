"""The pump device simulator.

A single-threaded discrete-event loop drives three event sources — motor
steps, index polls and externally scripted actions — in virtual or real
time. The device holds exactly one credential at a time and learns about
expiry only from the server's 401 responses: on any authentication
rejection it performs exactly one re-login and retries the exchange, and
after ``max_consecutive_failures`` failed exchanges in a row it enters
Fault and stops the motor for good.

Measurement model (the bench scale of the accuracy experiments): the
true delivered volume is steps x volume_per_step, grouped into drops of
``drop_volume_ml``; the scale shows the cumulative fallen mass scaled by
the run's calibration error (1+eps) and quantized to its resolution, and
each drop's measured mass is the difference between successive displays.
Quantizing the cumulative display rather than each drop is what lets a
small systematic error accumulate visibly instead of vanishing in
per-drop rounding.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from pumplink.clock import VirtualClock
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
    decode_message,
    encode_message,
    parse_error,
)
from pumplink.pump.config import PumpConfig
from pumplink.pump.motion import plan_infusion, volume_per_step
from pumplink.pump.transport import Transport, TransportError


class PumpPhase(Enum):
    IDLE = "idle"
    LOGGING_IN = "logging_in"
    AUTHORIZED = "authorized"
    INFUSING = "infusing"
    FAULT = "fault"


@dataclass(frozen=True)
class DropEvent:
    """One drop as the bench scale saw it."""

    t_s: float
    true_volume_ml: float
    measured_mass_g: float
    cumulative_mass_g: float


@dataclass(frozen=True)
class TraceEvent:
    t_s: float
    kind: str
    steps_emitted: int
    volume_ml: float
    measured_mass_g: float
    token_suffix: str = ""
    note: str = ""


def _truncated_gauss(rng: random.Random, sigma: float) -> float:
    """Normal(0, sigma) clipped to +-3 sigma by redraw; 0 when sigma is 0."""
    if sigma == 0.0:
        return 0.0
    while True:
        x = rng.gauss(0.0, sigma)
        if abs(x) <= 3.0 * sigma:
            return x


# Scripted actions receive the simulator; they run at their scheduled
# virtual time, before any poll or step due at the same instant.
Script = list[tuple[float, Callable[["PumpSimulator"], None]]]


@dataclass
class _Totals:
    polls_scheduled: int = 0
    polls_succeeded: int = 0
    logins: int = 0
    auth_rejections: int = 0


class PumpSimulator:
    def __init__(
        self,
        config: PumpConfig,
        transport: Transport,
        clock=None,
        seed: Optional[int] = None,
        script: Optional[Script] = None,
    ):
        self.config = config
        self.transport = transport
        self.clock = clock if clock is not None else VirtualClock()
        self.rng = random.Random(seed)
        self.vps = volume_per_step(config)
        self.epsilon = _truncated_gauss(self.rng, config.noise.step_volume_sigma_pct / 100.0)
        self.timer_scale = 1.0 + _truncated_gauss(self.rng, config.noise.timer_jitter_pct / 100.0)
        self._mac = MacAddress.parse(config.mac)

        self.phase = PumpPhase.IDLE
        self.held_token: Optional[str] = None
        self.active_index: Optional[InfusionIndex] = None
        self.steps_emitted = 0
        self.volume_delivered = 0.0  # true mL, always steps_emitted * vps
        self.last_poll_at: Optional[float] = None

        self.trace: list[TraceEvent] = []
        self.drops: list[DropEvent] = []
        self.sent_tokens: list[str] = []
        self.totals = _Totals()

        self.infusion_started_at: Optional[float] = None
        self.completed_at: Optional[float] = None

        self._script: Script = sorted(script or [], key=lambda item: item[0])
        self._step_period_eff: Optional[float] = None
        self._steps_remaining = 0
        self._next_step_at: Optional[float] = None
        self._next_poll_at: Optional[float] = None
        self._last_step_at: Optional[float] = None
        self._full_drops = 0
        self._display_units = 0  # scale display in whole resolution units
        self._failures = 0
        self._done = False

    # --- public ----------------------------------------------------------

    def run(self) -> None:
        """Full lifecycle: authenticate, fetch the prescription, infuse to
        completion (reporting start and end), or end in Fault."""
        self.phase = PumpPhase.LOGGING_IN
        self._next_poll_at = self.clock.now()
        while not self._done and self.phase is not PumpPhase.FAULT:
            self._advance_one_event()

    @property
    def measured_mass_g(self) -> float:
        return self._display_units * self.config.scale_resolution_g

    @property
    def measured_volume_ml(self) -> float:
        return self.measured_mass_g / self.config.density_g_per_ml

    # --- event loop ------------------------------------------------------

    def _advance_one_event(self) -> None:
        candidates: list[tuple[float, int, str]] = []
        if self._script:
            candidates.append((self._script[0][0], 0, "script"))
        if self._next_poll_at is not None:
            candidates.append((self._next_poll_at, 1, "poll"))
        if self.phase is PumpPhase.INFUSING and self._next_step_at is not None:
            candidates.append((self._next_step_at, 2, "step"))
        if not candidates:
            self._done = True
            return
        t, _, kind = min(candidates)
        self.clock.sleep_until(t)
        if kind == "script":
            _, action = self._script.pop(0)
            action(self)
        elif kind == "poll":
            self.totals.polls_scheduled += 1
            self._next_poll_at = t + self.config.polling_interval_s
            self._poll()
        else:
            self._do_step(t)

    # --- network exchanges -----------------------------------------------

    def _post(self, path: str, message) -> tuple[Optional[int], bytes]:
        try:
            return self.transport.post(path, encode_message(message))
        except TransportError as e:
            return None, str(e).encode()

    @staticmethod
    def _error_code(data: bytes) -> str:
        try:
            return parse_error(data).code.value
        except Exception:
            return ""

    def _trace(self, kind: str, token_suffix: str = "", note: str = "") -> None:
        self.trace.append(
            TraceEvent(
                t_s=self.clock.now(),
                kind=kind,
                steps_emitted=self.steps_emitted,
                volume_ml=self.volume_delivered,
                measured_mass_g=self.measured_mass_g,
                token_suffix=token_suffix,
                note=note,
            )
        )

    def _send_login(self) -> bool:
        req = LoginRequest(self.config.username, self.config.password, self._mac)
        status, data = self._post("/api/login", req)
        if status == 200:
            try:
                resp = decode_message(data, LoginResponse)
            except ApiError:
                self._trace("login_failed", note="unreadable login response")
                return False
            self.held_token = resp.token
            self.totals.logins += 1
            if self.phase is PumpPhase.LOGGING_IN:
                self.phase = PumpPhase.AUTHORIZED
            self._trace("login", token_suffix=resp.token[-6:])
            return True
        note = self._error_code(data) if status is not None else data.decode(errors="replace")
        self._trace("login_failed", note=f"status={status} {note}")
        return False

    def _exchange(self, send_once: Callable[[], tuple[str, object]]) -> tuple[str, object]:
        """One request with the single-re-login-then-retry rule applied."""
        kind, result = send_once()
        if kind == "auth":
            self.totals.auth_rejections += 1
            self._trace(f"auth_{result}")
            if self._send_login():
                kind, result = send_once()
                if kind == "auth":
                    self.totals.auth_rejections += 1
                    self._trace(f"auth_{result}", note="after re-login")
        return kind, result

    def _send_index_once(self) -> tuple[str, object]:
        if self.held_token is None:
            return "fail", "no token held"
        token = self.held_token
        self.sent_tokens.append(token)
        status, data = self._post(
            "/api/index", IndexRequest(token, self.config.patient_id, self._mac)
        )
        if status == 200:
            try:
                return "ok", decode_message(data, IndexResponse)
            except ApiError as e:
                return "fail", f"unreadable index response: {e}"
        if status == 401:
            code = self._error_code(data)
            label = {
                ErrorCode.TOKEN_EXPIRED.value: "expired",
                ErrorCode.TOKEN_CONSUMED.value: "consumed",
            }.get(code, "unknown")
            self.held_token = None
            return "auth", label
        if status is None:
            return "fail", data.decode(errors="replace")
        return "fail", f"status={status} {self._error_code(data)}"

    def _poll(self) -> bool:
        if self.held_token is None and not self._send_login():
            self._register_failure("login for poll failed")
            return False
        kind, result = self._exchange(self._send_index_once)
        if kind != "ok":
            self._trace("poll_failed", note=str(result))
            self._register_failure(f"poll failed: {result}")
            return False
        assert isinstance(result, IndexResponse)
        self.held_token = result.token
        self.last_poll_at = self.clock.now()
        self._failures = 0
        self.totals.polls_succeeded += 1
        self._trace("poll", token_suffix=result.token[-6:])
        self._adopt_index(result.index)
        return True

    def _send_event_once(self, event: str, payload: dict) -> Callable[[], tuple[str, object]]:
        def sender() -> tuple[str, object]:
            if self.held_token is None:
                return "fail", "no token held"
            token = self.held_token
            self.sent_tokens.append(token)
            report = EventReport(
                token=token,
                patient_id=self.config.patient_id,
                mac=self._mac,
                event=event,
                payload=payload,
            )
            status, data = self._post(f"/api/patients/{self.config.patient_id}/events", report)
            if status == 200:
                try:
                    return "ok", decode_message(data, EventAck)
                except ApiError as e:
                    return "fail", f"unreadable ack: {e}"
            if status == 401:
                code = self._error_code(data)
                label = {
                    ErrorCode.TOKEN_EXPIRED.value: "expired",
                    ErrorCode.TOKEN_CONSUMED.value: "consumed",
                }.get(code, "unknown")
                self.held_token = None
                return "auth", label
            if status is None:
                return "fail", data.decode(errors="replace")
            return "fail", f"status={status} {self._error_code(data)}"

        return sender

    def _report(self, event: str, payload: dict) -> bool:
        if self.held_token is None and not self._send_login():
            self._trace("report_failed", note=f"{event}: no session")
            return False
        kind, result = self._exchange(self._send_event_once(event, payload))
        if kind != "ok":
            self._trace("report_failed", note=f"{event}: {result}")
            return False
        assert isinstance(result, EventAck)
        self.held_token = result.token
        self._trace(event, token_suffix=result.token[-6:])
        return True

    # --- planning and motion ---------------------------------------------

    def _adopt_index(self, index: InfusionIndex) -> None:
        if self.active_index is not None and index.version == self.active_index.version:
            return
        now = self.clock.now()
        if self.phase is not PumpPhase.INFUSING:
            plan = plan_infusion(index, self.config)
            self.active_index = index
            self._steps_remaining = plan.total_steps
            self._step_period_eff = plan.step_period_s * self.timer_scale
            self.phase = PumpPhase.INFUSING
            self.infusion_started_at = now
            self._last_step_at = now
            self._next_step_at = now + self._step_period_eff
            self._report(
                "started",
                {
                    "volume_ml": float(index.volume_ml),
                    "rate_ml_h": float(index.rate_ml_h),
                    "version": index.version,
                },
            )
            if self._steps_remaining <= 0:  # degenerate sub-step prescription
                self._complete(now)
            return
        old = self.active_index
        self.active_index = index
        remaining_ml = float(index.volume_ml) - self.volume_delivered
        if remaining_ml <= 0:
            self._trace(
                "replan",
                note=f"v{old.version}->v{index.version}: target already exceeded",
            )
            self._complete(now)
            return
        remaining_plan = plan_infusion(
            InfusionIndex(index.volume_ml, index.rate_ml_h, index.version), self.config
        )
        self._steps_remaining = max(1, int(round(remaining_ml / self.vps)))
        self._step_period_eff = remaining_plan.step_period_s * self.timer_scale
        assert self._last_step_at is not None
        self._next_step_at = max(now, self._last_step_at + self._step_period_eff)
        self._trace(
            "replan",
            note=(
                f"v{old.version}->v{index.version}: "
                f"rate {old.rate_ml_h}->{index.rate_ml_h} mL/h, "
                f"{self._steps_remaining} steps left"
            ),
        )

    def _do_step(self, t: float) -> None:
        self.steps_emitted += 1
        self._steps_remaining -= 1
        self.volume_delivered = self.steps_emitted * self.vps
        self._last_step_at = t
        self._emit_full_drops(t)
        if self._steps_remaining <= 0:
            self._complete(t)
        else:
            self._next_step_at = t + self._step_period_eff

    def _scale_display_units(self, fallen_mass_g: float) -> int:
        return int(round(fallen_mass_g * (1.0 + self.epsilon) / self.config.scale_resolution_g))

    def _record_drop(self, t: float, true_volume_ml: float, fallen_volume_ml: float) -> None:
        units = self._scale_display_units(fallen_volume_ml * self.config.density_g_per_ml)
        measured = (units - self._display_units) * self.config.scale_resolution_g
        self._display_units = units
        self.drops.append(
            DropEvent(
                t_s=t,
                true_volume_ml=true_volume_ml,
                measured_mass_g=measured,
                cumulative_mass_g=self.measured_mass_g,
            )
        )
        self._trace("drop", note=f"drop {len(self.drops)}")

    def _emit_full_drops(self, t: float) -> None:
        while self.volume_delivered >= (self._full_drops + 1) * self.config.drop_volume_ml:
            self._full_drops += 1
            self._record_drop(
                t, self.config.drop_volume_ml, self._full_drops * self.config.drop_volume_ml
            )

    def _complete(self, t: float) -> None:
        residue = self.volume_delivered - self._full_drops * self.config.drop_volume_ml
        if residue > 1e-12:
            if self.drops and self.drops[-1].t_s == t:
                # the completing step also closed a full drop; the residue
                # leaves with that same drop, keeping drop times strictly
                # increasing
                last = self.drops.pop()
                res = self.config.scale_resolution_g
                prev_units = self._display_units - int(round(last.measured_mass_g / res))
                units = self._scale_display_units(
                    self.volume_delivered * self.config.density_g_per_ml
                )
                self._display_units = units
                self.drops.append(
                    DropEvent(
                        t_s=t,
                        true_volume_ml=last.true_volume_ml + residue,
                        measured_mass_g=(units - prev_units) * res,
                        cumulative_mass_g=self.measured_mass_g,
                    )
                )
            else:
                self._record_drop(t, residue, self.volume_delivered)
        self.completed_at = t
        self._next_step_at = None
        self.phase = PumpPhase.AUTHORIZED
        self._report("completed", {"delivered_ml": self.volume_delivered})
        self.phase = PumpPhase.IDLE
        self._done = True
        self._trace("done")

    # --- failure handling -------------------------------------------------

    def _register_failure(self, reason: str) -> None:
        self._failures += 1
        if self._failures >= self.config.max_consecutive_failures:
            self._enter_fault(reason)

    def _enter_fault(self, reason: str) -> None:
        self.phase = PumpPhase.FAULT
        self._next_step_at = None
        self._next_poll_at = None
        self._trace("fault", note=reason)
