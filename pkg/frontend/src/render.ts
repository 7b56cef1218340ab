/** Pure HTML renderers. Every number shown is the server's value verbatim
 * (no client-side recomputation), which keeps these functions trivially
 * testable in node. */

import type { BuilderState } from "./builder";
import { submitBlockers } from "./builder";
import type { FeedPanelState, ViewState } from "./store";
import type { DetectionPayload, ExplanationPayload } from "./types";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderFrequencyPanel(panel: FeedPanelState): string {
  if (panel.rows.length === 0) {
    return (
      `<section class="feed-panel" data-feed="${escapeHtml(panel.feedId)}">` +
      `<h3>${escapeHtml(panel.feedId)}</h3>` +
      `<p class="placeholder">no classifications yet</p></section>`
    );
  }
  const rows = panel.rows
    .map(
      (row) =>
        `<li class="class-node${row.marked ? " dimmed" : ""}"` +
        ` data-feed="${escapeHtml(panel.feedId)}"` +
        ` data-class="${escapeHtml(row.classLabel)}">` +
        `<span class="label">${escapeHtml(row.classLabel)}</span>` +
        `<span class="count">${row.count}</span>` +
        `<button class="mark-toggle">${row.marked ? "unmark" : "mark regular"}</button>` +
        `</li>`,
    )
    .join("");
  return (
    `<section class="feed-panel" data-feed="${escapeHtml(panel.feedId)}">` +
    `<h3>${escapeHtml(panel.feedId)}</h3><ul>${rows}</ul></section>`
  );
}

export function renderStreamBanner(state: ViewState): string {
  if (state.streamStatus === "live" && !state.needsRefetch) return "";
  if (state.needsRefetch) {
    return `<div class="banner warn">missed stream messages; reloading from the API…</div>`;
  }
  return (
    `<div class="banner ${state.streamStatus}">stream ${state.streamStatus}` +
    `<button class="retry">retry</button></div>`
  );
}

export function renderDetections(detections: DetectionPayload[]): string {
  if (detections.length === 0) {
    return `<p class="placeholder">no detections</p>`;
  }
  const rows = detections
    .map(
      (detection) =>
        `<tr class="detection-row" data-detection="${escapeHtml(detection.id)}">` +
        `<td>${escapeHtml(detection.definitionName)}</td>` +
        `<td>[${detection.intervalStart}, ${detection.intervalEnd}]</td>` +
        `<td>${detection.probability}</td>` +
        `<td>${detection.constituentEventIds.length} constituents</td></tr>`,
    )
    .join("");
  return (
    `<table class="detections"><thead><tr>` +
    `<th>pattern</th><th>interval</th><th>probability</th><th>provenance</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderExplanation(explanation: ExplanationPayload): string {
  const constituents = explanation.constituents
    .map(
      (line) =>
        `<tr class="constituent" data-event="${escapeHtml(line.eventId)}">` +
        `<td>${escapeHtml(line.role)}</td><td>${escapeHtml(line.classLabel)}</td>` +
        `<td>${line.confidence}</td><td>${escapeHtml(line.feedId)}</td>` +
        `<td>${escapeHtml(line.partner)}</td></tr>`,
    )
    .join("");
  const checks = explanation.constraintChecks
    .map(
      (check) =>
        `<tr class="check ${check.satisfied ? "ok" : "violated"}">` +
        `<td>${check.kind}</td><td>${check.actual}</td>` +
        `<td>${check.bound}</td><td>${check.satisfied ? "✓" : "✗"}</td></tr>`,
    )
    .join("");
  const terms = explanation.probabilityTerms
    .map(
      (term) =>
        `<li data-event="${escapeHtml(term.eventId)}">` +
        `${escapeHtml(term.eventId)}: ${term.confidence}</li>`,
    )
    .join("");
  return (
    `<article class="explanation" data-detection="${escapeHtml(explanation.detectionId)}">` +
    `<p class="narrative">${escapeHtml(explanation.narrative)}</p>` +
    `<table class="constituents"><thead><tr><th>role</th><th>class</th>` +
    `<th>confidence</th><th>feed</th><th>partner</th></tr></thead>` +
    `<tbody>${constituents}</tbody></table>` +
    `<table class="checks"><thead><tr><th>constraint</th><th>actual</th>` +
    `<th>bound</th><th>ok</th></tr></thead><tbody>${checks}</tbody></table>` +
    `<ul class="terms">${terms}</ul>` +
    `<p class="product">combined probability ${explanation.product}</p>` +
    `</article>`
  );
}

export function renderExplanationError(detail: string): string {
  return `<article class="explanation error"><p>${escapeHtml(detail)}</p></article>`;
}

export function renderBuilder(state: BuilderState, fragment: string | null): string {
  const blockers = submitBlockers(state);
  const constituents = state.constituents
    .map(
      (constituent, index) =>
        `<li data-index="${index}">` +
        `<span>${escapeHtml(constituent.matcher)}</span>` +
        `<span class="role">${constituent.role}</span>` +
        `<span class="kind">${constituent.matcherKind}</span>` +
        `<span class="min">×${constituent.minCount}</span>` +
        `<button class="remove-constituent">remove</button></li>`,
    )
    .join("");
  const reason = blockers.length
    ? `<p class="blockers">${escapeHtml(blockers.join("; "))}</p>`
    : "";
  const preview = fragment
    ? `<pre class="fragment">${escapeHtml(fragment)}</pre>`
    : "";
  return (
    `<form class="builder">` +
    `<ul class="constituents">${constituents}</ul>` +
    reason +
    `<button class="submit" type="submit"${blockers.length ? " disabled" : ""}>` +
    `compile &amp; save</button>` +
    preview +
    `</form>`
  );
}
