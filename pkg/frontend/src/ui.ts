/**
 * Pure HTML renderers. Each function maps viewmodel state to a markup
 * string and nothing else — no DOM access, no fetches — so the whole
 * presentation layer can be exercised with plain string assertions.
 * Every dynamic value passes through escapeHtml before interpolation.
 */

import type { SessionInfo } from "./session.js";
import type { HistoryEntry, PatientStatus } from "./types.js";
import type { ConsoleViewModel } from "./viewmodel.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function formatMl(value: number): string {
  return `${value.toFixed(2)} mL`;
}

export function formatRate(value: number): string {
  return `${value.toFixed(2)} mL/h`;
}

function formatTime(tMs: number): string {
  return new Date(tMs).toISOString().replace("T", " ").slice(0, 19);
}

export function renderLogin(error: string | null): string {
  return `
<section class="login-card">
  <h1>Infusion Console</h1>
  <form id="login-form">
    <label>Username
      <input type="text" id="login-username" autocomplete="username" required>
    </label>
    <label>Password
      <input type="password" id="login-password" autocomplete="current-password" required>
    </label>
    <button type="submit">Sign in</button>
  </form>
  ${error !== null ? `<p class="error" id="login-error">${escapeHtml(error)}</p>` : ""}
</section>`;
}

export function renderHeader(session: SessionInfo, stale: boolean, staleForS: number | null): string {
  const who = `${session.firstName} ${session.lastName}`.trim();
  const badge =
    stale && staleForS !== null
      ? `<span class="stale-badge" id="stale-badge">no contact for ${Math.floor(staleForS)}s — data may be out of date</span>`
      : "";
  return `
<header>
  <h1>Infusion Console</h1>
  <div class="whoami">${escapeHtml(who)} · ${escapeHtml(session.institution)}</div>
  ${badge}
  <button type="button" id="logout">Sign out</button>
</header>`;
}

export function renderPatientList(patients: PatientStatus[], selectedId: string | null): string {
  if (patients.length === 0) {
    return `<p class="empty">No patients assigned.</p>`;
  }
  const rows = patients
    .map((p) => {
      const selected = p.patient_id === selectedId ? " selected" : "";
      const pct = Math.round(p.pct_complete * 100);
      return `
    <li class="patient-row${selected}" data-patient-id="${escapeHtml(p.patient_id)}">
      <span class="pid">${escapeHtml(p.patient_id)}</span>
      <span class="pname">${escapeHtml(p.name)}</span>
      <span class="phase phase-${escapeHtml(p.phase)}">${escapeHtml(p.phase)}</span>
      <span class="pct">${pct}%</span>
    </li>`;
    })
    .join("");
  return `<ul class="patient-list">${rows}</ul>`;
}

function renderProposal(detail: PatientStatus): string {
  const proposal = detail.pending_proposal;
  if (proposal === null) {
    return "";
  }
  return `
  <div class="proposal" id="pending-proposal">
    <h3>Pending proposal</h3>
    <p>${formatMl(proposal.volume_ml)} at ${formatRate(proposal.rate_ml_h)}</p>
    <button type="button" id="approve-proposal">Approve</button>
    <button type="button" id="reject-proposal">Reject</button>
  </div>`;
}

function renderHistory(entries: HistoryEntry[]): string {
  if (entries.length === 0) {
    return `<p class="empty">No recorded events.</p>`;
  }
  const rows = entries
    .map((e) => {
      const payload = e.payload as Record<string, unknown>;
      const volume = typeof payload["volume_ml"] === "number" ? formatMl(payload["volume_ml"]) : "";
      const rate = typeof payload["rate_ml_h"] === "number" ? formatRate(payload["rate_ml_h"]) : "";
      const delivered =
        typeof payload["delivered_ml"] === "number" ? formatMl(payload["delivered_ml"]) : "";
      return `
    <tr>
      <td>${e.seq}</td>
      <td>${formatTime(e.t_ms)}</td>
      <td>${escapeHtml(e.event)}</td>
      <td>${escapeHtml(volume)}</td>
      <td>${escapeHtml(rate)}</td>
      <td>${escapeHtml(delivered)}</td>
    </tr>`;
    })
    .join("");
  return `
  <table class="history">
    <thead><tr><th>#</th><th>Time (UTC)</th><th>Event</th><th>Volume</th><th>Rate</th><th>Delivered</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderDetail(
  detail: PatientStatus,
  entries: HistoryEntry[],
  formError: { field: string; reason: string } | null,
  notice: string | null,
): string {
  const pct = Math.round(detail.pct_complete * 100);
  const pollAge =
    detail.last_poll_age_s !== null ? `${detail.last_poll_age_s.toFixed(1)}s ago` : "never";
  const volumeError =
    formError !== null && formError.field === "volume_ml"
      ? `<span class="field-error" id="volume-error">${escapeHtml(formError.reason)}</span>`
      : "";
  const rateError =
    formError !== null && formError.field === "rate_ml_h"
      ? `<span class="field-error" id="rate-error">${escapeHtml(formError.reason)}</span>`
      : "";
  return `
<section class="detail" data-patient-id="${escapeHtml(detail.patient_id)}">
  <h2>${escapeHtml(detail.name)} <small>(${escapeHtml(detail.patient_id)})</small></h2>
  ${notice !== null ? `<p class="notice" id="notice">${escapeHtml(notice)}</p>` : ""}
  <dl class="vitals">
    <dt>Phase</dt><dd id="phase">${escapeHtml(detail.phase)}</dd>
    <dt>Prescription</dt>
    <dd id="current-index">${formatMl(detail.index.volume_ml)} at ${formatRate(detail.index.rate_ml_h)} (v${detail.index.version})</dd>
    <dt>Delivered</dt><dd id="delivered">${formatMl(detail.delivered_ml)}</dd>
    <dt>Last device poll</dt><dd id="poll-age">${escapeHtml(pollAge)}</dd>
  </dl>
  <div class="progress"><div class="progress-bar" style="width: ${pct}%">${pct}%</div></div>
  <p class="limits">Limits: up to ${formatMl(detail.limits.max_volume_ml)},
     rate ${formatRate(detail.limits.min_rate_ml_h)} – ${formatRate(detail.limits.max_rate_ml_h)}</p>
  ${renderProposal(detail)}
  <form id="index-form" class="index-form">
    <h3>New prescription</h3>
    <label>Volume (mL)
      <input type="text" id="form-volume" inputmode="decimal">
      ${volumeError}
    </label>
    <label>Rate (mL/h)
      <input type="text" id="form-rate" inputmode="decimal">
      ${rateError}
    </label>
    <button type="submit">Send to pump</button>
  </form>
  <h3>Event history</h3>
  ${renderHistory(entries)}
</section>`;
}

export function renderApp(vm: ConsoleViewModel, nowMs: number): string {
  const session = vm.session;
  if (session === null) {
    return renderLogin(vm.loginError);
  }
  const staleForS = vm.staleSinceMs !== null ? (nowMs - vm.staleSinceMs) / 1000 : null;
  const detail =
    vm.detail !== null
      ? renderDetail(vm.detail, vm.historyEntries, vm.formError, vm.notice)
      : `<p class="empty">Select a patient.</p>`;
  return `
${renderHeader(session, vm.stale, staleForS)}
<main>
  <nav>${renderPatientList(vm.patients, vm.selectedId)}</nav>
  ${detail}
</main>`;
}
