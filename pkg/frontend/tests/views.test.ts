import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  maxWeight,
  renderBanner,
  renderBoard,
  renderCard,
  renderJob,
  renderNeighbors,
  renderPrediction,
  renderStagedEdits,
  sortByMaxWeight,
} from "../src/views.js";
import { sampleBoard } from "./helpers.js";

describe("views", () => {
  it("sorts cards by max output weight, descending", () => {
    const sorted = sortByMaxWeight(sampleBoard.prototypes);
    expect(sorted.map((p) => p.id)).toEqual([0, 1, 2]);
    expect(maxWeight(sorted[0]!)).toBe(2.1);
  });

  it("renders one card per prototype with matching ids", () => {
    const html = renderBoard(sampleBoard);
    expect(html).toContain('data-k="3"');
    for (const p of sampleBoard.prototypes) {
      expect(html).toContain(`data-id="${p.id}"`);
    }
    expect(html.match(/<article/g)).toHaveLength(3);
  });

  it("dims non-effective prototypes", () => {
    const dimmed = renderCard(sampleBoard.prototypes[2]!);
    expect(dimmed).toContain("dimmed");
    expect(dimmed).toContain("pruned by rule");
    expect(renderCard(sampleBoard.prototypes[0]!)).not.toContain("dimmed");
  });

  it("marks the selected card", () => {
    const html = renderBoard(sampleBoard, 1);
    expect(html).toMatch(/class="card selected" data-id="1"/);
  });

  it("renders neighbors with similarities verbatim from the service", () => {
    const html = renderNeighbors({
      prototype_id: 2,
      neighbors: [
        { text: "a b c", similarity: 0.912345, label: "Negative" },
        { text: "d e", similarity: 0.5, label: null },
      ],
    });
    expect(html).toContain('data-prototype="2"');
    expect(html).toContain("0.912");
    expect(html).toContain("[Negative]");
    expect(html.match(/<li>/g)).toHaveLength(2);
  });

  it("renders the service explanation text without recomputation", () => {
    const text =
      "Input: pizza is good\nPrediction: Negative\nExplanation: 0.69 * good food (Negative:2.1)";
    const html = renderPrediction({
      scores: [0.8, 0.2],
      predicted_class: 0,
      predicted_label: "Negative",
      explanation: { text, contributions: [] },
    });
    expect(html).toContain(escapeHtml(text));
    expect(html).toContain("Negative");
  });

  it("renders staged edits and the empty state", () => {
    expect(renderStagedEdits([])).toContain("No staged edits");
    const html = renderStagedEdits([
      { op: "delete", prototype_id: 2 },
      { op: "create", sequence: { tokens: ["a"] } },
    ]);
    expect(html.match(/<li/g)).toHaveLength(2);
    expect(html).toContain("delete prototype 2");
  });

  it("renders job progress and failures", () => {
    const running = renderJob({
      id: 7,
      kind: "finetune",
      status: "running",
      progress: { epoch: 2, total: 5 },
      checkpoint: null,
      error: null,
    });
    expect(running).toContain("running (2/5)");
    const failed = renderJob({
      id: 7,
      kind: "finetune",
      status: "failed",
      progress: { epoch: 1, total: 5 },
      checkpoint: null,
      error: "boom",
    });
    expect(failed).toContain("failed");
    expect(failed).toContain("boom");
  });

  it("escapes markup in service-provided text", () => {
    expect(escapeHtml("<b>&\"")).toBe("&lt;b&gt;&amp;&quot;");
    const banner = renderBanner('<script>alert("x")</script>');
    expect(banner).not.toContain("<script>");
    expect(banner).toContain("data-retry");
  });
});
