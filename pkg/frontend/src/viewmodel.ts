/**
 * Screen state and the rules for keeping it honest:
 *
 * - one refresh in flight at a time (concurrent calls share the promise),
 * - a patient's rendered prescription version never goes backwards, so a
 *   slow response from before an update can't repaint stale numbers,
 * - when the server stops answering, the view is flagged stale and the
 *   poll interval backs off exponentially (capped) until contact resumes,
 * - submit actions are single-flight so a double-click can't double-send.
 *
 * Rendering is left to the caller: the viewmodel emits change events and
 * exposes plain state.
 */

import { ApiFailure, ConsoleApi } from "./api.js";
import { clearSession, getSession, setSession } from "./session.js";
import type { SessionInfo } from "./session.js";
import type { HistoryEntry, PatientStatus } from "./types.js";
import { validateIndexForm } from "./validation.js";
import type { FormField } from "./validation.js";

export const REFRESH_INTERVAL_MS = 2000;
export const MAX_BACKOFF_MS = 30_000;

export interface FormError {
  field: FormField;
  reason: string;
}

type Listener = () => void;

export class ConsoleViewModel {
  readonly #api: ConsoleApi;
  readonly #now: () => number;
  readonly #listeners = new Set<Listener>();

  // highest prescription version accepted per patient, and the status
  // snapshot that carried it
  readonly #versionFloor = new Map<string, number>();
  readonly #lastAccepted = new Map<string, PatientStatus>();

  #inflight: Promise<void> | null = null;
  #submitting = false;

  patients: PatientStatus[] = [];
  selectedId: string | null = null;
  detail: PatientStatus | null = null;
  historyEntries: HistoryEntry[] = [];

  loginError: string | null = null;
  formError: FormError | null = null;
  notice: string | null = null;

  stale = false;
  staleSinceMs: number | null = null;
  #retryDelayMs = REFRESH_INTERVAL_MS;

  constructor(api: ConsoleApi, opts: { now?: () => number } = {}) {
    this.#api = api;
    this.#now = opts.now ?? Date.now;
  }

  // -- observation ---------------------------------------------------------

  subscribe(listener: Listener): () => void {
    this.#listeners.add(listener);
    return () => this.#listeners.delete(listener);
  }

  #emit(): void {
    for (const listener of this.#listeners) {
      listener();
    }
  }

  get session(): SessionInfo | null {
    return getSession();
  }

  /** Delay until the next poll: the base interval normally, backed off
   * while the server is unreachable. */
  get pollDelayMs(): number {
    return this.#retryDelayMs;
  }

  // -- auth ----------------------------------------------------------------

  async login(username: string, password: string, mac: string): Promise<boolean> {
    try {
      const ok = await this.#api.login(username, password, mac);
      setSession({
        token: ok.token,
        firstName: ok.first_name,
        lastName: ok.last_name,
        institution: ok.institution,
      });
      this.loginError = null;
      this.notice = null;
      this.#emit();
      await this.refresh();
      return true;
    } catch (exc) {
      this.loginError = exc instanceof ApiFailure ? exc.message : String(exc);
      this.#emit();
      return false;
    }
  }

  logout(): void {
    clearSession();
    this.patients = [];
    this.selectedId = null;
    this.detail = null;
    this.historyEntries = [];
    this.formError = null;
    this.notice = null;
    this.#versionFloor.clear();
    this.#lastAccepted.clear();
    this.#resetBackoff();
    this.#emit();
  }

  // -- selection -----------------------------------------------------------

  async select(patientId: string): Promise<void> {
    this.selectedId = patientId;
    this.detail = this.#lastAccepted.get(patientId) ?? null;
    this.historyEntries = [];
    this.formError = null;
    this.notice = null;
    this.#emit();
    await this.refresh();
  }

  deselect(): void {
    this.selectedId = null;
    this.detail = null;
    this.historyEntries = [];
    this.formError = null;
    this.#emit();
  }

  // -- polling -------------------------------------------------------------

  refresh(): Promise<void> {
    if (this.#inflight === null) {
      this.#inflight = this.#doRefresh().finally(() => {
        this.#inflight = null;
      });
    }
    return this.#inflight;
  }

  async #doRefresh(): Promise<void> {
    const session = getSession();
    if (session === null) {
      return;
    }
    try {
      const roster = await this.#api.listPatients(session.token);
      this.patients = roster.map((status) => this.#gate(status));
      if (this.selectedId !== null) {
        const detail = await this.#api.status(session.token, this.selectedId);
        this.detail = this.#gate(detail);
        this.historyEntries = await this.#api.history(session.token, this.selectedId);
      }
      this.#resetBackoff();
    } catch (exc) {
      this.#onFailure(exc);
    }
    this.#emit();
  }

  /** Drop a status snapshot whose version went backwards; otherwise accept
   * it and advance the floor. */
  #gate(status: PatientStatus): PatientStatus {
    const floor = this.#versionFloor.get(status.patient_id) ?? 0;
    if (status.index.version < floor) {
      return this.#lastAccepted.get(status.patient_id) ?? status;
    }
    this.#versionFloor.set(status.patient_id, status.index.version);
    this.#lastAccepted.set(status.patient_id, status);
    return status;
  }

  #resetBackoff(): void {
    this.stale = false;
    this.staleSinceMs = null;
    this.#retryDelayMs = REFRESH_INTERVAL_MS;
  }

  #onFailure(exc: unknown): void {
    if (exc instanceof ApiFailure && exc.sessionExpired) {
      this.logout();
      this.loginError = "session expired; please sign in again";
      return;
    }
    if (!this.stale) {
      this.stale = true;
      this.staleSinceMs = this.#now();
    }
    this.#retryDelayMs = Math.min(this.#retryDelayMs * 2, MAX_BACKOFF_MS);
  }

  // -- physician actions ---------------------------------------------------

  /** Returns true when the new prescription was accepted by the server. */
  async pushIndex(volumeMl: number, rateMlH: number): Promise<boolean> {
    const session = getSession();
    if (session === null || this.detail === null || this.#submitting) {
      return false;
    }
    const verdict = validateIndexForm(volumeMl, rateMlH, this.detail.limits);
    if (!verdict.ok) {
      this.formError = { field: verdict.field ?? "volume_ml", reason: verdict.reason ?? "invalid" };
      this.#emit();
      return false;
    }
    this.#submitting = true;
    try {
      const index = await this.#api.setIndex(
        session.token,
        this.detail.patient_id,
        volumeMl,
        rateMlH,
      );
      this.formError = null;
      this.notice = `prescription updated to v${index.version}`;
      this.#gate({ ...this.detail, index });
      await this.refresh();
      return true;
    } catch (exc) {
      this.#onActionFailure(exc);
      return false;
    } finally {
      this.#submitting = false;
      this.#emit();
    }
  }

  async resolve(approve: boolean): Promise<void> {
    const session = getSession();
    if (session === null || this.detail === null || this.#submitting) {
      return;
    }
    this.#submitting = true;
    try {
      const result = await this.#api.resolveProposal(
        session.token,
        this.detail.patient_id,
        approve,
      );
      this.notice = result.outcome === "approved" ? "proposal approved" : "proposal rejected";
      await this.refresh();
    } catch (exc) {
      if (exc instanceof ApiFailure && exc.status === 404) {
        this.notice = "proposal was already resolved elsewhere";
        await this.refresh();
      } else {
        this.#onActionFailure(exc);
      }
    } finally {
      this.#submitting = false;
      this.#emit();
    }
  }

  #onActionFailure(exc: unknown): void {
    if (!(exc instanceof ApiFailure)) {
      this.notice = String(exc);
      return;
    }
    if (exc.sessionExpired) {
      this.logout();
      this.loginError = "session expired; please sign in again";
      return;
    }
    if (exc.field !== undefined) {
      this.formError = { field: exc.field, reason: exc.message };
      return;
    }
    this.notice = exc.message;
  }
}
