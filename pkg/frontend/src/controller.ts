/**
 * Console state machine. Owns no authoritative data: every mutation is a
 * request to the workflow service, and the local queue is only a cache that
 * the next poll overwrites. Views render from the snapshot this exposes.
 */

import { ApiClient, ApiError } from "./api.js";
import type { DecisionRequest, Stats, Task } from "./api.js";
import type { Strings } from "./locale.js";
import { hasFullProvenance } from "./view.js";
import type { DecisionSummary } from "./view.js";

export const BASE_POLL_MS = 3000;
export const MAX_POLL_MS = 30000;

export type Outcome = "approve" | "correct" | "reject";

export interface DecisionInput {
  outcome: Outcome;
  reviewerId: string;
  correctedText?: string;
  rejectReason?: string;
}

export interface ConsoleSnapshot {
  tasks: Task[];
  selected?: Task;
  stats?: Stats;
  offline: boolean;
  pollDelayMs: number;
  inFlight: boolean;
  error?: string;
  lastDecision?: DecisionSummary;
  evalScore?: number;
}

export class ReviewDeskController {
  private readonly api: ApiClient;
  private readonly strings: Strings;

  private tasks: Task[] = [];
  private selectedId?: string;
  private stats?: Stats;
  private offline = false;
  private consecutiveFailures = 0;
  private inFlight = false;
  private error?: string;
  private lastDecision?: DecisionSummary;
  private evalScores = new Map<string, number>();

  constructor(api: ApiClient, strings: Strings) {
    this.api = api;
    this.strings = strings;
  }

  snapshot(): ConsoleSnapshot {
    return {
      tasks: [...this.tasks],
      selected: this.selectedTask(),
      stats: this.stats,
      offline: this.offline,
      pollDelayMs: this.pollDelayMs(),
      inFlight: this.inFlight,
      error: this.error,
      lastDecision: this.lastDecision,
      evalScore: this.selectedId === undefined
        ? undefined
        : this.evalScores.get(this.selectedId),
    };
  }

  /** Next poll interval; backs off exponentially while the service is down. */
  pollDelayMs(): number {
    if (this.consecutiveFailures === 0) {
      return BASE_POLL_MS;
    }
    return Math.min(
      MAX_POLL_MS, BASE_POLL_MS * 2 ** (this.consecutiveFailures - 1),
    );
  }

  selectedTask(): Task | undefined {
    return this.tasks.find((t) => t.task_id === this.selectedId);
  }

  /** Decision controls stay locked unless the output is fully attributed. */
  canDecide(task: Task): boolean {
    return hasFullProvenance(task) && !this.inFlight;
  }

  async refresh(): Promise<void> {
    try {
      const [tasks, stats] = await Promise.all([
        this.api.pendingTasks(),
        this.api.auditStats(),
      ]);
      tasks.sort((a, b) =>
        a.created_at < b.created_at ? -1 : a.created_at > b.created_at ? 1 : 0,
      );
      this.tasks = tasks;
      this.stats = stats;
      this.offline = false;
      this.consecutiveFailures = 0;
      if (this.selectedId && !this.selectedTask()) {
        this.selectedId = undefined;
      }
    } catch (err) {
      this.consecutiveFailures += 1;
      if (err instanceof ApiError && err.isConnectivity) {
        this.offline = true;
      } else {
        this.error = err instanceof Error ? err.message : String(err);
      }
    }
  }

  select(taskId: string): void {
    if (this.tasks.some((t) => t.task_id === taskId)) {
      this.selectedId = taskId;
      this.error = undefined;
      this.lastDecision = undefined;
      void this.loadEvalScore(taskId);
    }
  }

  /** Best-effort: a missing registry eval only blanks the score row. */
  private async loadEvalScore(taskId: string): Promise<void> {
    const task = this.tasks.find((t) => t.task_id === taskId);
    if (!task || !hasFullProvenance(task)) {
      return;
    }
    try {
      const manifest = await this.api.manifest(
        task.provenance.agent_id!, task.provenance.manifest_version!,
      );
      const score = manifest["eval_score"];
      if (typeof score === "number") {
        this.evalScores.set(taskId, score);
      }
    } catch {
      // score stays unknown; the panel renders its "not evaluated" row
    }
  }

  /** Returns a user-facing message when the input cannot be submitted. */
  validate(task: Task, input: DecisionInput): string | undefined {
    if (!hasFullProvenance(task)) {
      return this.strings.provenanceMissing;
    }
    if (!input.reviewerId.trim()) {
      return this.strings.reviewerRequired;
    }
    if (input.outcome === "correct") {
      const edited = (input.correctedText ?? "").trim();
      if (!edited || edited === task.subject_text.trim()) {
        return this.strings.correctionUnedited;
      }
    }
    if (input.outcome === "reject" && !(input.rejectReason ?? "").trim()) {
      return this.strings.rejectReasonRequired;
    }
    return undefined;
  }

  async submit(taskId: string, input: DecisionInput): Promise<boolean> {
    const task = this.tasks.find((t) => t.task_id === taskId);
    if (!task) {
      return false;
    }
    const problem = this.validate(task, input);
    if (problem) {
      this.error = problem;
      return false;
    }

    const request: DecisionRequest = {
      outcome: input.outcome,
      reviewer_id: input.reviewerId.trim(),
    };
    if (input.outcome === "correct") {
      request.corrected_text = (input.correctedText ?? "").trim();
    }
    if (input.outcome === "reject") {
      request.reject_reason = (input.rejectReason ?? "").trim();
    }

    // Optimistic removal: the task leaves the queue immediately and comes
    // back only if the service rejected the decision for a non-conflict
    // reason (a conflict means someone else already settled it).
    const keep = this.tasks;
    this.tasks = this.tasks.filter((t) => t.task_id !== taskId);
    this.inFlight = true;
    this.error = undefined;
    try {
      const result = await this.api.decide(taskId, request);
      this.lastDecision = {
        outcome: result.outcome,
        auditSeqs: result.audit_seqs,
        finalText: result.final_text ?? null,
      };
      if (this.selectedId === taskId) {
        this.selectedId = undefined;
      }
      await this.refresh();
      return true;
    } catch (err) {
      if (err instanceof ApiError
          && (err.isConflict || err.code === "task_not_pending")) {
        this.error = this.strings.alreadyDecided;
        if (this.selectedId === taskId) {
          this.selectedId = undefined;
        }
        await this.refresh();
      } else {
        this.tasks = keep;
        this.error = err instanceof Error ? err.message : String(err);
      }
      return false;
    } finally {
      this.inFlight = false;
    }
  }
}
