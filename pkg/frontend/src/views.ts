/**
 * Pure view functions: service responses in, HTML strings out. Keeping
 * rendering free of DOM state makes the layout unit-testable and
 * guarantees every displayed number is an echo of a service response.
 */

import type { Board, Job, Neighbors, Prediction, Prototype } from "./api.js";
import { describeEdit } from "./store.js";
import type { EditPayload } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function maxWeight(p: Prototype): number {
  return p.weights.length ? Math.max(...p.weights) : 0;
}

/** Board order: descending max output weight, id as tiebreaker. */
export function sortByMaxWeight(prototypes: readonly Prototype[]): Prototype[] {
  return [...prototypes].sort((a, b) => maxWeight(b) - maxWeight(a) || a.id - b.id);
}

export function renderCard(p: Prototype, selected = false): string {
  const weights = p.weights
    .map((w, c) => `${escapeHtml(p.class_names[c] ?? `Class ${c + 1}`)}: ${w.toFixed(2)}`)
    .join(", ");
  const classes = ["card", p.effective ? "" : "dimmed", selected ? "selected" : ""]
    .filter(Boolean)
    .join(" ");
  const provenance = p.provenance === null ? "<em>no provenance</em>" : escapeHtml(p.provenance);
  return [
    `<article class="${classes}" data-id="${p.id}">`,
    `  <header>#${p.id}${p.effective ? "" : " (pruned by rule)"}</header>`,
    `  <p class="provenance">${provenance}</p>`,
    `  <p class="weights">${weights}</p>`,
    `</article>`,
  ].join("\n");
}

export function renderBoard(board: Board, selectedId: number | null = null): string {
  const cards = sortByMaxWeight(board.prototypes)
    .map((p) => renderCard(p, p.id === selectedId))
    .join("\n");
  return `<section class="board" data-k="${board.k}">\n${cards}\n</section>`;
}

export function renderNeighbors(result: Neighbors): string {
  const rows = result.neighbors
    .map(
      (n) =>
        `<li><span class="sim">${n.similarity.toFixed(3)}</span> ` +
        `${escapeHtml(n.text)}${n.label === null ? "" : ` <span class="label">[${escapeHtml(n.label)}]</span>`}</li>`,
    )
    .join("\n");
  return `<aside class="neighbors" data-prototype="${result.prototype_id}">\n<ol>\n${rows}\n</ol>\n</aside>`;
}

export function renderPrediction(prediction: Prediction): string {
  // the explanation text is rendered verbatim from the service; the UI
  // adds no arithmetic of its own
  return [
    `<div class="prediction">`,
    `  <p class="label">${escapeHtml(prediction.predicted_label)}</p>`,
    `  <pre class="explanation">${escapeHtml(prediction.explanation.text)}</pre>`,
    `</div>`,
  ].join("\n");
}

export function renderStagedEdits(edits: readonly EditPayload[]): string {
  if (edits.length === 0) return `<p class="empty">No staged edits.</p>`;
  const items = edits
    .map((edit, i) => `<li data-index="${i}">${escapeHtml(describeEdit(edit))}</li>`)
    .join("\n");
  return `<ol class="staged">\n${items}\n</ol>`;
}

export function renderJob(job: Job): string {
  const progress = `${job.progress.epoch}/${job.progress.total}`;
  const error = job.error === null ? "" : ` — ${escapeHtml(job.error)}`;
  return `<p class="job ${job.status}">fine-tune #${job.id}: ${job.status} (${progress})${error}</p>`;
}

export function renderBanner(message: string): string {
  return `<div class="banner" role="alert">${escapeHtml(message)} <button data-retry>Retry</button></div>`;
}
