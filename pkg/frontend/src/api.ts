/**
 * Typed client for the workflow service. Every response body is validated
 * with zod before it reaches the rest of the console, so a schema drift on
 * the server side surfaces as a clear error banner instead of an undefined
 * creeping through the views.
 */

import { z } from "zod";

// Provenance fields are individually nullable here even though the server
// always sends them: the console's anti-black-box rule (no decision controls
// without full provenance) is enforced client-side, not assumed.
export const ProvenanceSchema = z.object({
  agent_id: z.string().nullish(),
  manifest_version: z.number().int().nullish(),
  model_id: z.string().nullish(),
});

export const TaskSchema = z.object({
  task_id: z.string(),
  trace_id: z.string(),
  encounter_id: z.string(),
  status: z.string(),
  subject_text: z.string(),
  summary: z.record(z.unknown()),
  content_hash: z.string(),
  artifact_id: z.string(),
  input_digest: z.string(),
  provenance: ProvenanceSchema,
  created_at: z.string(),
  decided_at: z.string().nullish(),
  reviewer_id: z.string().nullish(),
  corrected_text: z.string().nullish(),
  reject_reason: z.string().nullish(),
});

export const DecisionResultSchema = z.object({
  task_id: z.string(),
  outcome: z.string(),
  status: z.string(),
  encounter_phase: z.string(),
  final_text: z.string().nullish(),
  audit_seqs: z.array(z.number().int()),
});

export const StatsSchema = z.object({
  total_tasks: z.number().int(),
  actioned: z.number().int(),
  pending: z.number().int(),
  expired: z.number().int(),
  approved: z.number().int(),
  corrected: z.number().int(),
  rejected: z.number().int(),
  approve_rate_pct: z.number().int(),
  correct_rate_pct: z.number().int(),
  reject_rate_pct: z.number().int(),
  golden_size: z.number().int(),
  audit_records: z.number().int(),
});

export const EncounterSchema = z.object({
  encounter_id: z.string(),
  patient_ref: z.string(),
  trace_id: z.string(),
  phase: z.string(),
  version: z.number().int(),
  context: z.array(z.record(z.unknown())),
});

const ErrorEnvelopeSchema = z.object({
  code: z.string(),
  message: z.string(),
  detail: z.record(z.unknown()).default({}),
});

export type Provenance = z.infer<typeof ProvenanceSchema>;
export type Task = z.infer<typeof TaskSchema>;
export type DecisionResult = z.infer<typeof DecisionResultSchema>;
export type Stats = z.infer<typeof StatsSchema>;
export type Encounter = z.infer<typeof EncounterSchema>;

export interface DecisionRequest {
  outcome: "approve" | "correct" | "reject";
  reviewer_id: string;
  corrected_text?: string;
  reject_reason?: string;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: Record<string, unknown>;

  constructor(
    status: number,
    code: string,
    message: string,
    detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.detail = detail;
  }

  get isConflict(): boolean {
    return this.status === 409;
  }

  get isConnectivity(): boolean {
    return this.status === 0 || this.status >= 500;
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined
          ? { Accept: "application/json" }
          : { Accept: "application/json", "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "offline", String(err));
    }

    let payload: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        throw new ApiError(response.status, "malformed_response", text.slice(0, 200));
      }
    }
    if (!response.ok) {
      const parsed = ErrorEnvelopeSchema.safeParse(payload);
      if (parsed.success) {
        throw new ApiError(
          response.status, parsed.data.code, parsed.data.message, parsed.data.detail,
        );
      }
      throw new ApiError(response.status, "http_error", `HTTP ${response.status}`);
    }
    return payload;
  }

  private parse<T>(schema: z.ZodType<T>, payload: unknown): T {
    const result = schema.safeParse(payload);
    if (!result.success) {
      throw new ApiError(200, "malformed_response", result.error.message);
    }
    return result.data;
  }

  async healthz(): Promise<boolean> {
    await this.request("GET", "/v1/healthz");
    return true;
  }

  async pendingTasks(): Promise<Task[]> {
    const payload = await this.request("GET", "/v1/review/tasks?status=pending");
    return this.parse(z.array(TaskSchema), payload);
  }

  async task(taskId: string): Promise<Task> {
    const payload = await this.request(
      "GET", `/v1/review/tasks/${encodeURIComponent(taskId)}`,
    );
    return this.parse(TaskSchema, payload);
  }

  async decide(taskId: string, decision: DecisionRequest): Promise<DecisionResult> {
    const payload = await this.request(
      "POST",
      `/v1/review/tasks/${encodeURIComponent(taskId)}/decision`,
      decision,
    );
    return this.parse(DecisionResultSchema, payload);
  }

  async auditStats(): Promise<Stats> {
    const payload = await this.request("GET", "/v1/audit/stats");
    return this.parse(StatsSchema, payload);
  }

  async encounter(encounterId: string): Promise<Encounter> {
    const payload = await this.request(
      "GET", `/v1/encounters/${encodeURIComponent(encounterId)}`,
    );
    return this.parse(EncounterSchema, payload);
  }

  /** Raw manifest document; the console only reads optional display fields
   * (such as an eval score) when the registry happens to expose them. */
  async manifest(agentId: string, version?: number): Promise<Record<string, unknown>> {
    const suffix = version === undefined ? "" : `?version=${version}`;
    const payload = await this.request(
      "GET", `/v1/registry/${encodeURIComponent(agentId)}${suffix}`,
    );
    return this.parse(z.record(z.unknown()), payload);
  }
}
