/** Browser bootstrap: wires the stores to the DOM.
 *
 * Expects the shell page to provide #queue, #editor-text, #editor-findings,
 * #dashboard, #audit containers (see public/index.html) and a settings.json
 * next to the page.
 */

import { GatewayClient } from "./api.js";
import { DashboardModel } from "./dashboard.js";
import { EditorModel } from "./editor.js";
import { Poller } from "./poller.js";
import { QueueStore } from "./queue.js";
import { renderAudit, renderFindings, renderMatrix, renderQueue } from "./render.js";
import { parseSettings } from "./settings.js";

async function boot(): Promise<void> {
  const settings = parseSettings(await (await fetch("settings.json")).json());
  const client = new GatewayClient(settings.gatewayUrl);

  const queueEl = document.getElementById("queue")!;
  const editorText = document.getElementById("editor-text") as HTMLTextAreaElement;
  const editorFindings = document.getElementById("editor-findings")!;
  const dashboardEl = document.getElementById("dashboard")!;
  const auditEl = document.getElementById("audit")!;

  // escalation queue
  const queue = new QueueStore(client, settings.operatorId, settings.pollIntervalMs);
  const paintQueue = () => {
    queueEl.innerHTML = renderQueue(queue.items, queue.error, queue.notice);
  };
  queue.poller.start();
  setInterval(paintQueue, 250);
  queueEl.addEventListener("click", (event) => {
    const button = event.target as HTMLElement;
    const decision = button.dataset?.decision;
    const reviewId = button.closest<HTMLElement>("[data-review-id]")?.dataset.reviewId;
    if (!decision || !reviewId) return;
    const policyId =
      decision === "precedence"
        ? window.prompt("Policy id to take precedence:") ?? undefined
        : undefined;
    if (decision === "precedence" && !policyId) return;
    void queue
      .decide(reviewId, decision as "allow" | "block" | "precedence", policyId)
      .then(paintQueue);
  });

  // policy editor
  const editor = new EditorModel(client);
  await editor.load();
  editorText.value = editor.text;
  editorText.addEventListener("input", () => editor.edit(editorText.value));
  document.getElementById("editor-validate")?.addEventListener("click", () => {
    void editor.validate().then(() => {
      editorFindings.innerHTML = renderFindings(editor.findings);
    });
  });
  document.getElementById("editor-save")?.addEventListener("click", () => {
    void editor.save().then((ok) => {
      editorFindings.innerHTML = renderFindings(editor.findings);
      if (ok) void dashboard.load().then((m) => (dashboardEl.innerHTML = renderMatrix(m)));
    });
  });

  // conflict dashboard + audit view
  const dashboard = new DashboardModel(client);
  dashboardEl.innerHTML = renderMatrix(await dashboard.load());
  const auditPoller = new Poller(async () => {
    auditEl.innerHTML = renderAudit(await client.auditRecords());
  }, settings.pollIntervalMs);
  auditPoller.start();
}

void boot();
