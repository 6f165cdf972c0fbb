/**
 * End-to-end pass against the real workflow service: boot it as a
 * subprocess, drive one encounter through intake to a pending review task,
 * approve it from the console, and confirm the queue drains, the patient
 * preview carries the verbatim verification banner, and the audit counters
 * move.
 */

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { ReviewDeskController } from "../src/controller.js";
import { EN } from "../src/locale.js";
import { renderPatientPreview, renderQueue } from "../src/view.js";

const PORT = 8787;
const BASE = `http://127.0.0.1:${PORT}`;

const OPENING = "i have a headache, what should i do";
const ANSWERS = ["headache", "2 days", "4", "none", "none"];
const CONSULT_NOTES = "clinician reviewed the case, vitals within normal range";

let server: ChildProcess;
let serverLog = "";

async function sleep(ms: number): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor<T>(
  poll: () => Promise<T | undefined>,
  what: string,
  timeoutMs = 60_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = await poll().catch(() => undefined);
    if (value !== undefined) {
      return value;
    }
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}\nserver log:\n${serverLog}`);
    }
    await sleep(150);
  }
}

async function postJson(path: string, body: unknown): Promise<Response> {
  const response = await fetch(BASE + path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok && response.status !== 202) {
    throw new Error(`${path} -> ${response.status}: ${await response.text()}`);
  }
  return response;
}

async function getJson<T>(path: string): Promise<T> {
  const response = await fetch(BASE + path);
  if (!response.ok) {
    throw new Error(`${path} -> ${response.status}`);
  }
  return (await response.json()) as T;
}

interface EncounterBody {
  phase: string;
  context: Array<{ kind: string }>;
}

function countKind(encounter: EncounterBody, kind: string): number {
  return encounter.context.filter((entry) => entry.kind === kind).length;
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m", "careloop.cli", "serve",
      "--storage", "memory", "--seed", "5",
      "--host", "127.0.0.1", "--port", String(PORT),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk: Buffer) => { serverLog += chunk.toString(); });
  server.stderr?.on("data", (chunk: Buffer) => { serverLog += chunk.toString(); });
  await waitFor(async () => {
    const response = await fetch(`${BASE}/v1/healthz`);
    return response.ok ? true : undefined;
  }, "service health check");
});

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("review console against the live service", () => {
  it("approves a real task end to end", async () => {
    // --- drive one encounter to a pending review task over plain HTTP ----
    const opened = await postJson("/v1/messages", {
      patient_identity: "patient-rt-1", text: OPENING,
    });
    const { encounter_id: encounterId } =
      (await opened.json()) as { encounter_id: string };

    for (let i = 0; i < ANSWERS.length; i += 1) {
      await waitFor(async () => {
        const enc = await getJson<EncounterBody>(`/v1/encounters/${encounterId}`);
        return countKind(enc, "agent_question") >= i + 1 ? true : undefined;
      }, `intake question ${i + 1}`);
      await postJson("/v1/messages", {
        text: ANSWERS[i], encounter_id: encounterId,
      });
    }
    await waitFor(async () => {
      const enc = await getJson<EncounterBody>(`/v1/encounters/${encounterId}`);
      return enc.phase === "awaiting_consult" ? true : undefined;
    }, "awaiting_consult phase");
    await postJson(`/v1/encounters/${encounterId}/consult-notes`, {
      notes: CONSULT_NOTES,
    });

    // --- the console picks the task up through its normal refresh --------
    const controller = new ReviewDeskController(new ApiClient(BASE), EN);
    await waitFor(async () => {
      await controller.refresh();
      return controller.snapshot().tasks.length === 1 ? true : undefined;
    }, "pending review task");

    const before = controller.snapshot();
    expect(before.offline).toBe(false);
    const task = before.tasks[0]!;
    expect(task.encounter_id).toBe(encounterId);
    expect(task.status).toBe("pending");
    expect(task.provenance.agent_id).toBe("post_agent");
    expect(task.provenance.manifest_version).toBeGreaterThanOrEqual(1);
    expect(task.provenance.model_id.length).toBeGreaterThan(0);
    const queueHtml = renderQueue(before.tasks, EN, new Date());
    expect(queueHtml).toContain("Validate: ");
    const actionedBefore = before.stats!.actioned;

    controller.select(task.task_id);
    expect(controller.canDecide(task)).toBe(true);
    const ok = await controller.submit(task.task_id, {
      outcome: "approve", reviewerId: "dr-souza",
    });
    expect(ok).toBe(true);

    // --- queue drains, banner renders verbatim, audit counter moves ------
    const after = controller.snapshot();
    expect(after.tasks).toHaveLength(0);
    expect(after.lastDecision?.outcome).toBe("approve");
    expect(after.lastDecision?.finalText).toBe(task.subject_text);
    expect(after.lastDecision!.auditSeqs.length).toBeGreaterThan(0);

    const preview = renderPatientPreview(after.lastDecision!, EN);
    expect(preview).toContain(
      "Our medical team has verified that the answer given to your question "
      + "is correct!",
    );

    const stats = await new ApiClient(BASE).auditStats();
    expect(stats.actioned).toBe(actionedBefore + 1);
    expect(stats.approved).toBeGreaterThanOrEqual(1);
    expect(stats.pending).toBe(0);

    const encounter = await getJson<EncounterBody>(`/v1/encounters/${encounterId}`);
    expect(encounter.phase).toBe("finalized");
  });
});
