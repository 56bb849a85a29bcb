/**
 * Typed HTTP client for the infusion server. Stateless: session tokens
 * are passed in per call, so the layer is trivially testable with an
 * injected fetch implementation.
 *
 * Every non-2xx response is raised as an ApiFailure carrying the server's
 * machine-readable error code; network-level failures surface with status
 * 0 and code "Transport" so callers can tell "server said no" apart from
 * "server unreachable".
 */

import type {
  ErrorBody,
  HistoryEntry,
  IndexPayload,
  LoginOk,
  PatientStatus,
  ResolveOk,
} from "./types.js";
import type { FormField } from "./validation.js";

export class ApiFailure extends Error {
  readonly code: string;
  readonly status: number;
  /** Set for limit violations so forms can highlight the offending input. */
  readonly field: FormField | undefined;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ApiFailure";
    this.code = code;
    this.status = status;
    this.field = ApiFailure.#fieldFor(code, message);
  }

  static #fieldFor(code: string, message: string): FormField | undefined {
    if (code !== "LimitViolation") {
      return undefined;
    }
    if (message.startsWith("volume")) {
      return "volume_ml";
    }
    if (message.startsWith("rate")) {
      return "rate_ml_h";
    }
    return undefined;
  }

  /** True when the stored session token was rejected and a fresh login
   * is the only way forward. */
  get sessionExpired(): boolean {
    return this.status === 401 && this.code.startsWith("Token");
  }
}

export class ConsoleApi {
  readonly #base: string;
  readonly #fetch: typeof fetch;

  constructor(baseUrl: string, fetchImpl: typeof fetch = fetch) {
    this.#base = baseUrl.replace(/\/+$/, "");
    this.#fetch = fetchImpl;
  }

  async login(username: string, password: string, mac: string): Promise<LoginOk> {
    return (await this.#request("POST", "/api/login", {
      body: { username, password, mac },
    })) as LoginOk;
  }

  async listPatients(token: string): Promise<PatientStatus[]> {
    const body = (await this.#request("GET", "/api/patients", { token })) as {
      patients: PatientStatus[];
    };
    return body.patients;
  }

  async status(token: string, patientId: string): Promise<PatientStatus> {
    const path = `/api/patients/${encodeURIComponent(patientId)}/status`;
    return (await this.#request("GET", path, { token })) as PatientStatus;
  }

  async history(
    token: string,
    patientId: string,
    fromMs?: number,
    toMs?: number,
  ): Promise<HistoryEntry[]> {
    const params = new URLSearchParams();
    if (fromMs !== undefined) {
      params.set("from_ms", String(fromMs));
    }
    if (toMs !== undefined) {
      params.set("to_ms", String(toMs));
    }
    const query = params.size > 0 ? `?${params.toString()}` : "";
    const path = `/api/patients/${encodeURIComponent(patientId)}/history${query}`;
    const body = (await this.#request("GET", path, { token })) as {
      entries: HistoryEntry[];
    };
    return body.entries;
  }

  async setIndex(
    token: string,
    patientId: string,
    volumeMl: number,
    rateMlH: number,
  ): Promise<IndexPayload> {
    const path = `/api/patients/${encodeURIComponent(patientId)}/index`;
    const body = (await this.#request("POST", path, {
      token,
      body: { volume_ml: volumeMl, rate_ml_h: rateMlH },
    })) as { index: IndexPayload };
    return body.index;
  }

  async proposeIndex(
    patientId: string,
    volumeMl: number,
    rateMlH: number,
  ): Promise<{ status: string }> {
    const path = `/api/patients/${encodeURIComponent(patientId)}/proposal`;
    return (await this.#request("POST", path, {
      body: { volume_ml: volumeMl, rate_ml_h: rateMlH },
    })) as { status: string };
  }

  async resolveProposal(
    token: string,
    patientId: string,
    approve: boolean,
  ): Promise<ResolveOk> {
    const path = `/api/patients/${encodeURIComponent(patientId)}/proposal/resolve`;
    return (await this.#request("POST", path, { token, body: { approve } })) as ResolveOk;
  }

  async healthy(): Promise<boolean> {
    try {
      await this.#request("GET", "/healthz", {});
      return true;
    } catch {
      return false;
    }
  }

  async #request(
    method: "GET" | "POST",
    path: string,
    opts: { token?: string; body?: unknown },
  ): Promise<unknown> {
    const headers: Record<string, string> = {};
    if (opts.token !== undefined) {
      headers["authorization"] = `Bearer ${opts.token}`;
    }
    const init: RequestInit = { method, headers };
    if (opts.body !== undefined) {
      headers["content-type"] = "application/json";
      init.body = JSON.stringify(opts.body);
    }
    let resp: Response;
    try {
      resp = await this.#fetch(`${this.#base}${path}`, init);
    } catch (exc) {
      const reason = exc instanceof Error ? exc.message : String(exc);
      throw new ApiFailure("Transport", `server unreachable: ${reason}`, 0);
    }
    if (resp.ok) {
      return resp.json();
    }
    let error: ErrorBody;
    try {
      error = (await resp.json()) as ErrorBody;
    } catch {
      throw new ApiFailure("Transport", `unexpected response ${resp.status}`, resp.status);
    }
    throw new ApiFailure(error.error, error.message, resp.status);
  }
}
