/**
 * Browser entry point: wires the controller to the DOM and runs the poll
 * loop. All rendering logic lives in view.ts; all state lives in
 * controller.ts; this file only shuttles events between them.
 */

import { ApiClient } from "./api.js";
import { ReviewDeskController } from "./controller.js";
import type { Outcome } from "./controller.js";
import { strings } from "./locale.js";
import type { LocaleId } from "./locale.js";
import {
  renderDetail,
  renderOfflineBanner,
  renderPatientPreview,
  renderQueue,
  renderStatsBar,
} from "./view.js";

function pickLocale(): LocaleId {
  const param = new URLSearchParams(window.location.search).get("locale");
  if (param === "pt-BR") return "pt-BR";
  if (param === "en") return "en";
  return navigator.language.toLowerCase().startsWith("pt") ? "pt-BR" : "en";
}

function main(): void {
  const s = strings(pickLocale());
  const baseUrl = new URLSearchParams(window.location.search).get("api")
    ?? "http://127.0.0.1:8000";
  const api = new ApiClient(baseUrl);
  const controller = new ReviewDeskController(api, s);

  const bannerEl = document.getElementById("banner")!;
  const statsEl = document.getElementById("stats")!;
  const queueEl = document.getElementById("queue")!;
  const detailEl = document.getElementById("detail")!;

  function render(): void {
    const snap = controller.snapshot();
    bannerEl.innerHTML = snap.offline
      ? renderOfflineBanner(s, Math.round(snap.pollDelayMs / 1000))
      : "";
    statsEl.innerHTML = snap.stats ? renderStatsBar(snap.stats, s) : "";
    queueEl.innerHTML = renderQueue(
      snap.tasks, s, new Date(), snap.selected?.task_id,
    );
    if (snap.lastDecision) {
      detailEl.innerHTML = renderPatientPreview(snap.lastDecision, s);
    } else if (snap.selected) {
      detailEl.innerHTML = renderDetail(
        {
          task: snap.selected,
          inFlight: snap.inFlight,
          error: snap.error,
          evalScore: snap.evalScore,
        },
        s,
      );
    } else {
      detailEl.innerHTML = snap.error
        ? `<p class="detail-error" role="alert">${snap.error}</p>`
        : "";
    }
  }

  queueEl.addEventListener("click", (event) => {
    const item = (event.target as HTMLElement).closest<HTMLElement>("[data-task-id]");
    if (item?.dataset.taskId) {
      controller.select(item.dataset.taskId);
      render();
    }
  });

  detailEl.addEventListener("click", async (event) => {
    const button = (event.target as HTMLElement).closest("button");
    const article = (event.target as HTMLElement).closest<HTMLElement>("[data-task-id]");
    if (!button || !article?.dataset.taskId || button.disabled) {
      return;
    }
    const outcome = button.name as Outcome;
    const read = (selector: string): string =>
      article.querySelector<HTMLInputElement | HTMLTextAreaElement>(selector)
        ?.value ?? "";
    await controller.submit(article.dataset.taskId, {
      outcome,
      reviewerId: read("input[name=reviewer]"),
      correctedText: read("textarea[name=correction]"),
      rejectReason: read("input[name=reject-reason]"),
    });
    render();
  });

  async function poll(): Promise<void> {
    await controller.refresh();
    render();
    window.setTimeout(poll, controller.pollDelayMs());
  }

  void poll();
}

document.addEventListener("DOMContentLoaded", main);
