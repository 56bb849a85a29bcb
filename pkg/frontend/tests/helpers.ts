import type { PatientStatus } from "../src/types.js";

export interface RecordedCall {
  method: string;
  path: string;
  headers: Record<string, string>;
  body: unknown;
}

export type RouteHandler = (call: RecordedCall) => { status: number; body: unknown };

/** In-memory fetch double routed by "METHOD /path"; records every call.
 * Unrouted paths come back as the server's NotFound shape. */
export function makeFakeFetch(routes: Record<string, RouteHandler>): {
  impl: typeof fetch;
  calls: RecordedCall[];
} {
  const calls: RecordedCall[] = [];
  const impl = (async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input));
    const method = init?.method ?? "GET";
    const call: RecordedCall = {
      method,
      path: url.pathname,
      headers: { ...((init?.headers ?? {}) as Record<string, string>) },
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    };
    calls.push(call);
    const handler = routes[`${method} ${url.pathname}`];
    const result =
      handler === undefined
        ? { status: 404, body: { error: "NotFound", message: `no route ${url.pathname}` } }
        : handler(call);
    return new Response(JSON.stringify(result.body), {
      status: result.status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return { impl, calls };
}

export function countCalls(calls: RecordedCall[], method: string, path: string): number {
  return calls.filter((c) => c.method === method && c.path === path).length;
}

export function statusFor(
  patientId: string,
  version: number,
  overrides: Partial<PatientStatus> = {},
): PatientStatus {
  return {
    patient_id: patientId,
    name: `Patient ${patientId}`,
    phase: "infusing",
    limits: { max_volume_ml: 10.0, min_rate_ml_h: 0.1, max_rate_ml_h: 200.0 },
    index: { volume_ml: 2.0, rate_ml_h: 4.0, version },
    pending_proposal: null,
    delivered_ml: 0.5,
    pct_complete: 0.25,
    last_poll_age_s: 1.2,
    ...overrides,
  };
}

export const LOGIN_OK = {
  first_name: "Avery",
  last_name: "Adams",
  institution: "Riverside General",
  token: "a".repeat(32),
};
