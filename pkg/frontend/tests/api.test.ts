import { describe, expect, it } from "vitest";

import { ApiError, SteeringApi } from "../src/api.js";
import { fakeFetch, sampleBoard } from "./helpers.js";

describe("SteeringApi", () => {
  it("fetches and validates the prototype board", async () => {
    const { fetch, requests } = fakeFetch(() => ({ status: 200, body: sampleBoard }));
    const api = new SteeringApi("http://svc", fetch);
    const board = await api.board();
    expect(requests[0]?.url).toBe("http://svc/v1/prototypes");
    expect(board.k).toBe(3);
    expect(board.prototypes[2]?.effective).toBe(false);
  });

  it("rejects a malformed board payload", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 200,
      body: { k: 1, prototypes: [{ id: "zero" }] },
    }));
    const api = new SteeringApi("http://svc", fetch);
    await expect(api.board()).rejects.toThrow();
  });

  it("requests neighbors with the n parameter", async () => {
    const { fetch, requests } = fakeFetch(() => ({
      status: 200,
      body: {
        prototype_id: 1,
        neighbors: [{ text: "a b", similarity: 0.9, label: "Negative" }],
      },
    }));
    const api = new SteeringApi("http://svc", fetch);
    const result = await api.neighbors(1);
    expect(requests[0]?.url).toBe("http://svc/v1/prototypes/1/neighbors?n=5");
    expect(result.neighbors[0]?.similarity).toBe(0.9);
  });

  it("posts prediction payloads and validates explanations", async () => {
    const { fetch, requests } = fakeFetch(() => ({
      status: 200,
      body: {
        scores: [0.8, 0.2],
        predicted_class: 0,
        predicted_label: "Negative",
        explanation: {
          text: "Input: x\nPrediction: Negative\nExplanation: 0.70 * y (Negative:2.1)",
          contributions: [
            { prototype_id: 0, similarity: 0.7, weights: [2.1, 0], provenance: "y" },
          ],
        },
      },
    }));
    const api = new SteeringApi("http://svc", fetch);
    const prediction = await api.predict({ tokens: ["x"] });
    expect(requests[0]?.method).toBe("POST");
    expect(requests[0]?.body).toEqual({ sequence: { tokens: ["x"] } });
    expect(prediction.predicted_label).toBe("Negative");
    expect(prediction.explanation.contributions).toHaveLength(1);
  });

  it("surfaces HTTP errors with status and detail", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 409,
      body: { detail: "a fine-tune job is already running" },
    }));
    const api = new SteeringApi("http://svc", fetch);
    const error = await api.startFinetune(5).catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(409);
    expect((error as ApiError).message).toMatch(/already running/);
  });

  it("parses job payloads", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 200,
      body: {
        id: 3,
        kind: "finetune",
        status: "running",
        progress: { epoch: 2, total: 5 },
        checkpoint: null,
        error: null,
      },
    }));
    const api = new SteeringApi("http://svc", fetch);
    const job = await api.job(3);
    expect(job.status).toBe("running");
    expect(job.progress).toEqual({ epoch: 2, total: 5 });
  });
});
