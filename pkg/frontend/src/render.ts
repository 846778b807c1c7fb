/** Pure HTML renderers. No state, no fetches: view = f(data). */

import type { ConflictMatrix } from "./dashboard.js";
import type { AuditRecord, ReviewItem, ValidationFinding } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderQueue(
  items: ReviewItem[],
  error: string | null,
  notice: string | null,
): string {
  const parts: string[] = [];
  if (error) {
    parts.push(`<div class="banner banner-error">${escapeHtml(error)}</div>`);
  }
  if (notice) {
    parts.push(`<div class="banner banner-notice">${escapeHtml(notice)}</div>`);
  }
  if (items.length === 0) {
    parts.push('<p class="empty-state">No pending reviews.</p>');
    return parts.join("\n");
  }
  parts.push('<ul class="review-list">');
  for (const item of items) {
    const conflict = escapeHtml(JSON.stringify(item.conflict));
    parts.push(
      `<li class="review" data-review-id="${escapeHtml(item.id)}">` +
        `<span class="review-id">${escapeHtml(item.id)}</span>` +
        `<span class="session">${escapeHtml(item.sessionId)}</span>` +
        `<code class="conflict">${conflict}</code>` +
        `<button data-decision="allow">Allow</button>` +
        `<button data-decision="block">Block</button>` +
        `<button data-decision="precedence">Precedence…</button>` +
        `</li>`,
    );
  }
  parts.push("</ul>");
  return parts.join("\n");
}

export function renderFindings(findings: ValidationFinding[]): string {
  if (findings.length === 0) {
    return '<p class="findings-clear">No findings.</p>';
  }
  const rows = findings
    .map(
      (f) =>
        `<li class="finding finding-${escapeHtml(f.severity)}">` +
        `<strong>${escapeHtml(f.severity)}</strong> ` +
        `<code>${escapeHtml(f.path)}</code> ${escapeHtml(f.message)}</li>`,
    )
    .join("\n");
  return `<ul class="findings">\n${rows}\n</ul>`;
}

export function renderMatrix(matrix: ConflictMatrix): string {
  const head = matrix.policies
    .map((p) => `<th>${escapeHtml(p)}</th>`)
    .join("");
  const rows = matrix.policies
    .map((row) => {
      const cells = matrix.policies
        .map((col) => {
          if (row === col) return '<td class="self">—</td>';
          const cell = matrix.cells[row][col];
          const badge =
            cell.contexts.length > 0
              ? `<span class="badge">${cell.contexts.map(escapeHtml).join(", ")}</span>`
              : "";
          const dot = cell.dot === null ? "" : ` (${cell.dot.toFixed(2)})`;
          return `<td class="cell cell-${cell.case}">${cell.case}${dot}${badge}</td>`;
        })
        .join("");
      return `<tr><th>${escapeHtml(row)}</th>${cells}</tr>`;
    })
    .join("\n");
  const blocking = matrix.blocking
    ? '<div class="banner banner-error">Blocking conflicts present.</div>'
    : "";
  return `${blocking}<table class="conflict-matrix"><thead><tr><th></th>${head}</tr></thead><tbody>\n${rows}\n</tbody></table>`;
}

export function renderAudit(records: AuditRecord[]): string {
  if (records.length === 0) return '<p class="empty-state">No audit records.</p>';
  const rows = records
    .map(
      (r) =>
        `<tr><td>${r.timestamp.toFixed(3)}</td><td>${escapeHtml(r.sessionId)}</td>` +
        `<td>${escapeHtml(r.direction)}</td><td>${escapeHtml(r.verdictAction)}</td>` +
        `<td>${r.upstreamCalled ? "yes" : "no"}</td>` +
        `<td>${escapeHtml(r.triggeredRuleIds.join(", "))}</td></tr>`,
    )
    .join("\n");
  return (
    '<table class="audit"><thead><tr><th>time</th><th>session</th><th>side</th>' +
    "<th>action</th><th>upstream</th><th>rules</th></tr></thead><tbody>" +
    rows +
    "</tbody></table>"
  );
}
