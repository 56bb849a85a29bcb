import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ConsoleApi } from "../src/api.js";
import { clearSession, getSession, setSession } from "../src/session.js";
import { ConsoleViewModel } from "../src/viewmodel.js";
import { LOGIN_OK, makeFakeFetch, statusFor } from "./helpers.js";

/** Storage double that records every mutation attempt. */
class RecordingStorage {
  readonly writes: string[] = [];
  get length(): number {
    return 0;
  }
  clear(): void {
    this.writes.push("clear");
  }
  getItem(_key: string): string | null {
    return null;
  }
  key(_index: number): string | null {
    return null;
  }
  removeItem(key: string): void {
    this.writes.push(`removeItem:${key}`);
  }
  setItem(key: string, value: string): void {
    this.writes.push(`setItem:${key}=${value}`);
  }
}

const scope = globalThis as Record<string, unknown>;
let local: RecordingStorage;
let session: RecordingStorage;
let hadLocal: unknown;
let hadSession: unknown;

beforeEach(() => {
  hadLocal = scope["localStorage"];
  hadSession = scope["sessionStorage"];
  local = new RecordingStorage();
  session = new RecordingStorage();
  scope["localStorage"] = local;
  scope["sessionStorage"] = session;
  clearSession();
});

afterEach(() => {
  scope["localStorage"] = hadLocal;
  scope["sessionStorage"] = hadSession;
  clearSession();
});

describe("session holder", () => {
  it("keeps the token in memory only", () => {
    setSession({ token: "t".repeat(32), firstName: "A", lastName: "B", institution: "C" });
    expect(getSession()?.token).toBe("t".repeat(32));
    expect(local.writes).toEqual([]);
    expect(session.writes).toEqual([]);
  });

  it("clears on demand", () => {
    setSession({ token: "t".repeat(32), firstName: "A", lastName: "B", institution: "C" });
    clearSession();
    expect(getSession()).toBeNull();
  });

  it("never touches persistent storage across a full login/refresh/logout flow", async () => {
    const { impl } = makeFakeFetch({
      "POST /api/login": () => ({ status: 200, body: LOGIN_OK }),
      "GET /api/patients": () => ({ status: 200, body: { patients: [statusFor("p001", 1)] } }),
      "GET /api/patients/p001/status": () => ({ status: 200, body: statusFor("p001", 1) }),
      "GET /api/patients/p001/history": () => ({ status: 200, body: { entries: [] } }),
    });
    const vm = new ConsoleViewModel(new ConsoleApi("http://testhost", impl));

    expect(await vm.login("dr-adams", "demo-password", "CC:00:00:00:00:01")).toBe(true);
    expect(getSession()?.token).toBe(LOGIN_OK.token);
    await vm.select("p001");
    await vm.refresh();
    vm.logout();
    expect(getSession()).toBeNull();

    expect(local.writes).toEqual([]);
    expect(session.writes).toEqual([]);
  });
});
