/**
 * Pure rendering functions: state in, HTML string out. No DOM access here,
 * which keeps every visual rule (banner verbatim, disabled controls without
 * provenance, oldest-first ordering) testable without a browser.
 */

import type { Stats, Task } from "./api.js";
import type { Strings } from "./locale.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Compact age like "3m" / "2h" / "5d" relative to `now` (ISO timestamps). */
export function formatAge(createdAt: string, now: Date): string {
  const created = Date.parse(createdAt);
  if (Number.isNaN(created)) {
    return "?";
  }
  const seconds = Math.max(0, Math.floor((now.getTime() - created) / 1000));
  if (seconds < 60) return `${seconds}s`;
  if (seconds < 3600) return `${Math.floor(seconds / 60)}m`;
  if (seconds < 86400) return `${Math.floor(seconds / 3600)}h`;
  return `${Math.floor(seconds / 86400)}d`;
}

/** True only when every provenance field is present; the gate for controls. */
export function hasFullProvenance(task: Task): boolean {
  const p = task.provenance;
  return (
    typeof p.agent_id === "string" && p.agent_id.length > 0
    && typeof p.manifest_version === "number"
    && typeof p.model_id === "string" && p.model_id.length > 0
  );
}

export function renderQueue(
  tasks: Task[],
  s: Strings,
  now: Date,
  selectedId?: string,
): string {
  if (tasks.length === 0) {
    return renderEmptyQueue(s);
  }
  const ordered = [...tasks].sort((a, b) =>
    a.created_at < b.created_at ? -1 : a.created_at > b.created_at ? 1 : 0,
  );
  const items = ordered.map((task) => {
    const selected = task.task_id === selectedId ? " selected" : "";
    const label = `${s.validatePrefix}: ${task.subject_text}`;
    return (
      `<li class="queue-item${selected}" data-task-id="${escapeHtml(task.task_id)}">`
      + `<span class="queue-label">${escapeHtml(label)}</span>`
      + `<span class="queue-age">${escapeHtml(formatAge(task.created_at, now))}</span>`
      + `</li>`
    );
  });
  return (
    `<h2>${escapeHtml(s.queueTitle)} (${tasks.length})</h2>`
    + `<ul class="queue">${items.join("")}</ul>`
  );
}

export function renderEmptyQueue(s: Strings): string {
  return (
    `<h2>${escapeHtml(s.queueTitle)} (0)</h2>`
    + `<p class="empty-queue">${escapeHtml(s.emptyQueue)}</p>`
  );
}

export function renderOfflineBanner(s: Strings, retryInSeconds: number): string {
  return (
    `<div class="offline-banner" role="alert">`
    + `${escapeHtml(s.offlineBanner)} ${escapeHtml(s.retryHint(retryInSeconds))}`
    + `</div>`
  );
}

export function renderProvenance(
  task: Task,
  s: Strings,
  evalScore?: number,
): string {
  if (!hasFullProvenance(task)) {
    return (
      `<section class="provenance missing">`
      + `<h3>${escapeHtml(s.provenanceTitle)}</h3>`
      + `<p class="provenance-warning" role="alert">`
      + escapeHtml(s.provenanceMissing)
      + `</p></section>`
    );
  }
  const p = task.provenance;
  const evalRow = evalScore === undefined
    ? `<dd class="eval-missing">${escapeHtml(s.provenanceEvalMissing)}</dd>`
    : `<dd>${escapeHtml(evalScore.toFixed(2))}</dd>`;
  return (
    `<section class="provenance">`
    + `<h3>${escapeHtml(s.provenanceTitle)}</h3>`
    + `<dl>`
    + `<dt>${escapeHtml(s.provenanceAgent)}</dt><dd>${escapeHtml(p.agent_id!)}</dd>`
    + `<dt>${escapeHtml(s.provenanceVersion)}</dt><dd>v${p.manifest_version}</dd>`
    + `<dt>${escapeHtml(s.provenanceModel)}</dt><dd>${escapeHtml(p.model_id!)}</dd>`
    + `<dt>${escapeHtml(s.provenanceEval)}</dt>${evalRow}`
    + `</dl></section>`
  );
}

/** Line-level diff used to show a correction next to the AI draft. */
export function diffLines(before: string, after: string): string {
  const beforeLines = before.split("\n");
  const afterLines = new Set(after.split("\n"));
  const beforeSet = new Set(beforeLines);
  const rows: string[] = [];
  for (const line of beforeLines) {
    const cls = afterLines.has(line) ? "same" : "removed";
    rows.push(`<div class="diff-${cls}">${escapeHtml(line)}</div>`);
  }
  for (const line of after.split("\n")) {
    if (!beforeSet.has(line)) {
      rows.push(`<div class="diff-added">${escapeHtml(line)}</div>`);
    }
  }
  return `<div class="diff">${rows.join("")}</div>`;
}

export interface DetailState {
  task: Task;
  inFlight: boolean;
  error?: string;
  evalScore?: number;
  correctionDraft?: string;
}

export function renderDetail(state: DetailState, s: Strings): string {
  const { task, inFlight } = state;
  const canDecide = hasFullProvenance(task) && !inFlight;
  const disabled = canDecide ? "" : " disabled";
  const summaryRows = Object.entries(task.summary)
    .map(([key, value]) =>
      `<dt>${escapeHtml(key)}</dt><dd>${escapeHtml(String(value))}</dd>`)
    .join("");
  const draft = state.correctionDraft ?? task.subject_text;
  const diff = draft === task.subject_text
    ? ""
    : `<h4>${escapeHtml(s.diffTitle)}</h4>${diffLines(task.subject_text, draft)}`;
  const errorBlock = state.error
    ? `<p class="detail-error" role="alert">${escapeHtml(state.error)}</p>`
    : "";
  const inFlightBlock = inFlight
    ? `<p class="in-flight">${escapeHtml(s.decisionInFlight)}</p>`
    : "";
  return (
    `<article class="task-detail" data-task-id="${escapeHtml(task.task_id)}">`
    + `<h2>${escapeHtml(s.validatePrefix)}: ${escapeHtml(task.task_id)}</h2>`
    + renderProvenance(task, s, state.evalScore)
    + `<section class="ai-output">`
    + `<h3>${escapeHtml(s.aiOutputTitle)}</h3>`
    + `<p class="subject-text">${escapeHtml(task.subject_text)}</p>`
    + `<dl class="summary-fields">${summaryRows}</dl>`
    + `</section>`
    + `<section class="decision-controls">`
    + `<label>${escapeHtml(s.reviewerLabel)}`
    + `<input name="reviewer" type="text"${disabled}></label>`
    + `<label>${escapeHtml(s.correctionLabel)}`
    + `<textarea name="correction"${disabled}>${escapeHtml(draft)}</textarea></label>`
    + diff
    + `<label>${escapeHtml(s.rejectReasonLabel)}`
    + `<input name="reject-reason" type="text"${disabled}></label>`
    + `<button name="approve"${disabled}>${escapeHtml(s.approveButton)}</button>`
    + `<button name="correct"${disabled}>${escapeHtml(s.correctButton)}</button>`
    + `<button name="reject"${disabled}>${escapeHtml(s.rejectButton)}</button>`
    + `</section>`
    + errorBlock
    + inFlightBlock
    + `</article>`
  );
}

export interface DecisionSummary {
  outcome: string;
  auditSeqs: number[];
  finalText: string | null;
}

/**
 * Post-decision view. Approve/correct show the conversation exactly as the
 * patient receives it: the final answer followed by the verification banner.
 */
export function renderPatientPreview(
  decision: DecisionSummary,
  s: Strings,
): string {
  const headline = `<h3>${escapeHtml(s.decidedHeadline(decision.outcome))}</h3>`;
  const seqs = `<p class="audit-seqs">${escapeHtml(s.auditSeqLabel)}: `
    + `${decision.auditSeqs.join(", ")}</p>`;
  if (decision.finalText === null) {
    return `<section class="patient-preview">${headline}${seqs}</section>`;
  }
  return (
    `<section class="patient-preview">`
    + headline
    + `<h4>${escapeHtml(s.patientPreviewTitle)}</h4>`
    + `<p class="final-text">${escapeHtml(decision.finalText)}</p>`
    + `<p class="verification-banner">${escapeHtml(s.verificationBanner)}</p>`
    + seqs
    + `</section>`
  );
}

export function renderStatsBar(stats: Stats, s: Strings): string {
  const cell = (label: string, value: number) =>
    `<span class="stat"><b>${value}</b> ${escapeHtml(label)}</span>`;
  return (
    `<div class="stats-bar" title="${escapeHtml(s.statsTitle)}">`
    + cell(s.pendingLabel, stats.pending)
    + cell(s.actionedLabel, stats.actioned)
    + cell(s.approvedLabel, stats.approved)
    + cell(s.correctedLabel, stats.corrected)
    + cell(s.rejectedLabel, stats.rejected)
    + `</div>`
  );
}
