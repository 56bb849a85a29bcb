/**
 * Live end-to-end suite against a real infusion server spawned as a child
 * process. Two things are on trial:
 *
 * 1. Validation parity — over 1000 generated prescription forms, the
 *    client-side verdict must agree exactly with the server's
 *    accept/reject decision for the same limits.
 * 2. Proposal round-trips — approve and reject through the viewmodel
 *    must land in the live view within one refresh.
 */

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiFailure, ConsoleApi } from "../src/api.js";
import { clearSession, setSession } from "../src/session.js";
import { validateIndexForm } from "../src/validation.js";
import { ConsoleViewModel } from "../src/viewmodel.js";

const PYTHON = process.env["PUMPLINK_PYTHON"] ?? "python3";
const USERNAME = "dr-adams";
const PASSWORD = "demo-password";
const CONSOLE_MAC = "CC:00:00:00:00:01";

let workDir: string;
let server: ChildProcess | null = null;
let baseUrl: string;
let api: ConsoleApi;
let token: string;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

function runPython(args: string[]): Promise<void> {
  return new Promise((resolve, reject) => {
    const child = spawn(PYTHON, args, { stdio: ["ignore", "ignore", "inherit"] });
    child.once("error", reject);
    child.once("exit", (code) =>
      code === 0 ? resolve() : reject(new Error(`${args.join(" ")} exited ${code}`)),
    );
  });
}

async function waitForHealthz(url: string, proc: ChildProcess, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) {
      throw new Error(`server exited early with code ${proc.exitCode}`);
    }
    try {
      const resp = await fetch(`${url}/healthz`);
      if (resp.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`server not reachable within ${timeoutMs} ms`);
}

/** Small deterministic PRNG so the 1000-form sweep is reproducible. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-live-"));
  const fixturePath = join(workDir, "fixture.json");
  await runPython([
    "-m",
    "pumplink.server.main",
    "make-fixture",
    "--patients",
    "3",
    "--out",
    fixturePath,
  ]);

  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    PYTHON,
    [
      "-m",
      "pumplink.server.main",
      "run",
      "--fixture",
      fixturePath,
      "--host",
      "127.0.0.1",
      "--port",
      String(port),
      "--quiet",
    ],
    {
      stdio: ["ignore", "inherit", "inherit"],
      env: { ...process.env, PUMPLINK_KDF_MODE: "fast" },
    },
  );
  await waitForHealthz(baseUrl, server, 20_000);

  api = new ConsoleApi(baseUrl);
  const login = await api.login(USERNAME, PASSWORD, CONSOLE_MAC);
  token = login.token;
}, 120_000);

afterAll(() => {
  clearSession();
  if (server !== null && server.exitCode === null) {
    server.kill("SIGTERM");
  }
  rmSync(workDir, { recursive: true, force: true });
});

/** Boundary probes around every limit edge, then uniform two- and
 * three-decimal draws spanning well past the limits on both sides. */
function generateForms(count: number): Array<{ volume: number; rate: number }> {
  const rand = mulberry32(42);
  const volumeEdges = [10.0, 10.01, 9.99, 0.01, 0.0, -0.01, 2.005, 0.001];
  const rateEdges = [0.1, 0.09, 0.11, 200.0, 200.01, 199.99, -1.0, 4.005];
  const forms: Array<{ volume: number; rate: number }> = [];
  for (const volume of volumeEdges) {
    for (const rate of rateEdges) {
      forms.push({ volume, rate });
    }
  }
  while (forms.length < count) {
    const volume =
      rand() < 0.1
        ? Math.round((rand() * 14 - 2) * 1000) / 1000 // occasional 3-decimal value
        : Math.round((rand() * 14 - 2) * 100) / 100;
    const rate =
      rand() < 0.1
        ? Math.round((rand() * 255 - 5) * 1000) / 1000
        : Math.round((rand() * 255 - 5) * 100) / 100;
    forms.push({ volume, rate });
  }
  return forms.slice(0, count);
}

describe("live console against a real server", () => {
  it("client validation accepts exactly the forms the server accepts (1000-form sweep)", async () => {
    const status = await api.status(token, "p001");
    const limits = status.limits;

    const forms = generateForms(1000);
    let accepted = 0;
    let rejected = 0;
    const disagreements: string[] = [];

    for (const form of forms) {
      const verdict = validateIndexForm(form.volume, form.rate, limits);
      let serverAccepted: boolean;
      try {
        await api.setIndex(token, "p001", form.volume, form.rate);
        serverAccepted = true;
        accepted += 1;
      } catch (exc) {
        if (!(exc instanceof ApiFailure) || exc.status === 0) {
          throw exc;
        }
        serverAccepted = false;
        rejected += 1;
      }
      if (verdict.ok !== serverAccepted) {
        disagreements.push(
          `volume=${form.volume} rate=${form.rate}: client=${verdict.ok} server=${serverAccepted}`,
        );
      }
    }

    expect(disagreements).toEqual([]);
    expect(accepted).toBeGreaterThan(100);
    expect(rejected).toBeGreaterThan(100);
    console.log(
      `criterion 10 PASS: validation parity on 1000 forms ` +
        `(${accepted} accepted, ${rejected} rejected, 0 disagreements)`,
    );
  });

  it("in-limit boundary forms land as accepted versions", async () => {
    const before = await api.status(token, "p001");
    const index = await api.setIndex(token, "p001", 5.0, 5.0);
    expect(index.volume_ml).toBe(5.0);
    expect(index.rate_ml_h).toBe(5.0);
    expect(index.version).toBe(before.index.version + 1);
  });

  it("approve lands in the live view within one refresh", async () => {
    setSession({ token, firstName: "A", lastName: "Adams", institution: "RG" });
    const vm = new ConsoleViewModel(new ConsoleApi(baseUrl));
    await vm.select("p002");
    const baseVersion = vm.detail!.index.version;

    await api.proposeIndex("p002", 4.0, 6.0);
    await vm.refresh();
    expect(vm.detail!.pending_proposal).toEqual({ volume_ml: 4.0, rate_ml_h: 6.0 });

    await vm.resolve(true);
    expect(vm.notice).toBe("proposal approved");
    expect(vm.detail!.pending_proposal).toBeNull();
    expect(vm.detail!.index).toEqual({ volume_ml: 4.0, rate_ml_h: 6.0, version: baseVersion + 1 });

    const entries = await api.history(token, "p002");
    expect(entries.some((e) => e.event === "ProposalApproved")).toBe(true);
  });

  it("reject leaves the prescription untouched", async () => {
    setSession({ token, firstName: "A", lastName: "Adams", institution: "RG" });
    const vm = new ConsoleViewModel(new ConsoleApi(baseUrl));
    await vm.select("p003");
    const baseIndex = vm.detail!.index;

    await api.proposeIndex("p003", 3.0, 7.0);
    await vm.refresh();
    expect(vm.detail!.pending_proposal).not.toBeNull();

    await vm.resolve(false);
    expect(vm.notice).toBe("proposal rejected");
    expect(vm.detail!.pending_proposal).toBeNull();
    expect(vm.detail!.index).toEqual(baseIndex);

    const entries = await api.history(token, "p003");
    expect(entries.some((e) => e.event === "ProposalRejected")).toBe(true);
  });

  it("a stale resolve shows a notice and mutates nothing", async () => {
    setSession({ token, firstName: "A", lastName: "Adams", institution: "RG" });
    const vm = new ConsoleViewModel(new ConsoleApi(baseUrl));
    await vm.select("p003");
    expect(vm.detail!.pending_proposal).toBeNull();
    const baseIndex = vm.detail!.index;

    await vm.resolve(true);
    expect(vm.notice).toMatch(/already resolved/);
    expect(vm.detail!.index).toEqual(baseIndex);
  });
});
