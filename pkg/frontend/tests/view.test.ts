import { describe, expect, it } from "vitest";
import type { Task } from "../src/api.js";
import { EN, PT_BR } from "../src/locale.js";
import {
  diffLines,
  escapeHtml,
  formatAge,
  hasFullProvenance,
  renderDetail,
  renderOfflineBanner,
  renderPatientPreview,
  renderQueue,
  renderStatsBar,
} from "../src/view.js";

function task(overrides: Partial<Task> = {}): Task {
  return {
    task_id: "tsk-1",
    trace_id: "trc-1",
    encounter_id: "enc-1",
    status: "pending",
    subject_text: "Patient reports mild headache; advised rest and hydration.",
    summary: { complaint: "headache", severity: "2" },
    content_hash: "c".repeat(64),
    artifact_id: "art-1",
    input_digest: "d".repeat(64),
    provenance: { agent_id: "post_agent", manifest_version: 3, model_id: "gpt-4o" },
    created_at: "2024-03-01T10:00:00+00:00",
    decided_at: null,
    reviewer_id: null,
    corrected_text: null,
    reject_reason: null,
    ...overrides,
  };
}

const NOW = new Date("2024-03-01T12:00:00+00:00");

describe("escapeHtml", () => {
  it("neutralizes markup in patient-supplied text", () => {
    expect(escapeHtml(`<img src=x onerror="alert('x')">`))
      .toBe("&lt;img src=x onerror=&quot;alert(&#39;x&#39;)&quot;&gt;");
  });
});

describe("formatAge", () => {
  it.each([
    ["2024-03-01T11:59:30+00:00", "30s"],
    ["2024-03-01T11:30:00+00:00", "30m"],
    ["2024-03-01T07:00:00+00:00", "5h"],
    ["2024-02-27T12:00:00+00:00", "3d"],
  ])("renders %s as %s", (createdAt, expected) => {
    expect(formatAge(createdAt, NOW)).toBe(expected);
  });
});

describe("renderQueue", () => {
  it("lists tasks oldest first with the validate prefix and age", () => {
    const html = renderQueue(
      [
        task({ task_id: "tsk-new", created_at: "2024-03-01T11:00:00+00:00" }),
        task({
          task_id: "tsk-old",
          created_at: "2024-03-01T09:00:00+00:00",
          subject_text: "Second complaint",
        }),
      ],
      EN,
      NOW,
    );
    expect(html.indexOf("tsk-old")).toBeLessThan(html.indexOf("tsk-new"));
    expect(html).toContain("Validate: Second complaint");
    expect(html).toContain("3h");
    expect(html).toContain("Tasks (2)");
  });

  it("renders the empty state when nothing is pending", () => {
    const html = renderQueue([], EN, NOW);
    expect(html).toContain(EN.emptyQueue);
    expect(html).toContain("Tasks (0)");
  });

  it("uses the Portuguese queue title and validate prefix", () => {
    const html = renderQueue([task()], PT_BR, NOW);
    expect(html).toContain("Tarefas (1)");
    expect(html).toContain("Validar: ");
  });

  it("escapes hostile subject text", () => {
    const html = renderQueue(
      [task({ subject_text: "<script>steal()</script>" })], EN, NOW,
    );
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("renderOfflineBanner", () => {
  it("shows the outage message with the retry countdown", () => {
    const html = renderOfflineBanner(EN, 12);
    expect(html).toContain(EN.offlineBanner);
    expect(html).toContain("Retrying in 12s");
  });
});

describe("provenance gating", () => {
  it("treats complete provenance as decidable", () => {
    expect(hasFullProvenance(task())).toBe(true);
  });

  it.each([
    ["agent_id", { agent_id: null, manifest_version: 3, model_id: "gpt-4o" }],
    ["manifest_version", { agent_id: "a", manifest_version: null, model_id: "m" }],
    ["model_id", { agent_id: "a", manifest_version: 3, model_id: null }],
  ])("blocks when %s is missing", (_field, provenance) => {
    const t = task({ provenance: provenance as Task["provenance"] });
    expect(hasFullProvenance(t)).toBe(false);
    const html = renderDetail({ task: t, inFlight: false }, EN);
    expect(html).toContain(EN.provenanceMissing);
    expect(html).not.toContain(`<button name="approve">`);
    expect(html).toContain(`<button name="approve" disabled>`);
    expect(html).toContain(`<button name="correct" disabled>`);
    expect(html).toContain(`<button name="reject" disabled>`);
  });
});

describe("renderDetail", () => {
  it("shows agent, version, model and the unevaluated score row", () => {
    const html = renderDetail({ task: task(), inFlight: false }, EN);
    expect(html).toContain("post_agent");
    expect(html).toContain("v3");
    expect(html).toContain("gpt-4o");
    expect(html).toContain(EN.provenanceEvalMissing);
    expect(html).toContain(`<button name="approve">`);
  });

  it("shows a numeric eval score when the registry exposes one", () => {
    const html = renderDetail(
      { task: task(), inFlight: false, evalScore: 0.75 }, EN,
    );
    expect(html).toContain("0.75");
    expect(html).not.toContain(EN.provenanceEvalMissing);
  });

  it("disables controls while a decision is in flight", () => {
    const html = renderDetail({ task: task(), inFlight: true }, EN);
    expect(html).toContain(`<button name="approve" disabled>`);
    expect(html).toContain(EN.decisionInFlight);
  });

  it("marks an edited draft with a line diff", () => {
    const html = renderDetail(
      {
        task: task({ subject_text: "line one\nline two" }),
        inFlight: false,
        correctionDraft: "line one\nline two fixed",
      },
      EN,
    );
    expect(html).toContain(`<div class="diff-removed">line two</div>`);
    expect(html).toContain(`<div class="diff-added">line two fixed</div>`);
    expect(html).toContain(`<div class="diff-same">line one</div>`);
  });

  it("surfaces a validation error inline", () => {
    const html = renderDetail(
      { task: task(), inFlight: false, error: EN.rejectReasonRequired }, EN,
    );
    expect(html).toContain(EN.rejectReasonRequired);
  });
});

describe("diffLines", () => {
  it("classifies kept, removed and added lines", () => {
    const html = diffLines("a\nb\nc", "a\nc\nd");
    expect(html).toContain(`<div class="diff-same">a</div>`);
    expect(html).toContain(`<div class="diff-removed">b</div>`);
    expect(html).toContain(`<div class="diff-added">d</div>`);
  });
});

describe("renderPatientPreview", () => {
  it("renders the final text followed by the verbatim verification banner", () => {
    const html = renderPatientPreview(
      {
        outcome: "approve",
        auditSeqs: [7, 8],
        finalText: "Rest and hydrate; return if symptoms worsen.",
      },
      EN,
    );
    const banner =
      "Our medical team has verified that the answer given to your question "
      + "is correct!";
    expect(html.split(banner)).toHaveLength(2); // exactly once
    const textAt = html.indexOf("Rest and hydrate");
    const bannerAt = html.indexOf(banner);
    expect(textAt).toBeGreaterThan(-1);
    expect(bannerAt).toBeGreaterThan(textAt);
    expect(html).toContain("7, 8");
  });

  it("renders the Portuguese banner for the pt-BR desk", () => {
    const html = renderPatientPreview(
      { outcome: "correct", auditSeqs: [3], finalText: "Texto corrigido." },
      PT_BR,
    );
    expect(html).toContain(
      "Nossa equipe médica verificou que a resposta dada à sua pergunta "
      + "está correta!",
    );
  });

  it("omits the patient conversation after a reject", () => {
    const html = renderPatientPreview(
      { outcome: "reject", auditSeqs: [9], finalText: null }, EN,
    );
    expect(html).toContain("Decision recorded: reject");
    expect(html).not.toContain(EN.verificationBanner);
    expect(html).not.toContain(EN.patientPreviewTitle);
  });
});

describe("renderStatsBar", () => {
  it("shows the throughput counters", () => {
    const html = renderStatsBar(
      {
        total_tasks: 350, actioned: 144, pending: 0, expired: 206,
        approved: 117, corrected: 27, rejected: 0,
        approve_rate_pct: 81, correct_rate_pct: 19, reject_rate_pct: 0,
        golden_size: 27, audit_records: 844,
      },
      EN,
    );
    expect(html).toContain("<b>144</b> actioned");
    expect(html).toContain("<b>117</b> approved");
    expect(html).toContain("<b>27</b> corrected");
    expect(html).toContain("<b>0</b> rejected");
  });
});
