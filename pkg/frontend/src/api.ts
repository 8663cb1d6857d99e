/**
 * Typed client for the protoseq steering service (/v1).
 *
 * Every number shown in the UI comes from these responses; the client
 * never computes model math locally. All payloads are validated with zod
 * so a drifting server contract fails loudly instead of rendering junk.
 */

import { z } from "zod";

export const PrototypeSchema = z.object({
  id: z.number().int(),
  provenance: z.string().nullable(),
  tokens: z.array(z.string()).nullable(),
  weights: z.array(z.number()),
  class_names: z.array(z.string()),
  effective: z.boolean(),
});
export type Prototype = z.infer<typeof PrototypeSchema>;

export const BoardSchema = z.object({
  k: z.number().int(),
  prototypes: z.array(PrototypeSchema),
});
export type Board = z.infer<typeof BoardSchema>;

export const NeighborSchema = z.object({
  text: z.string(),
  similarity: z.number(),
  label: z.string().nullable(),
});
export const NeighborsSchema = z.object({
  prototype_id: z.number().int(),
  neighbors: z.array(NeighborSchema),
});
export type Neighbors = z.infer<typeof NeighborsSchema>;

export const ContributionSchema = z.object({
  prototype_id: z.number().int(),
  similarity: z.number(),
  weights: z.array(z.number()),
  provenance: z.string().nullable(),
});
export const PredictionSchema = z.object({
  scores: z.array(z.number()),
  predicted_class: z.number().int(),
  predicted_label: z.string(),
  explanation: z.object({
    text: z.string(),
    contributions: z.array(ContributionSchema),
  }),
});
export type Prediction = z.infer<typeof PredictionSchema>;

export const JobSchema = z.object({
  id: z.number().int(),
  kind: z.string(),
  status: z.enum(["queued", "running", "done", "failed"]),
  progress: z.object({ epoch: z.number(), total: z.number() }),
  checkpoint: z.string().nullable(),
  error: z.string().nullable(),
});
export type Job = z.infer<typeof JobSchema>;

export interface SequencePayload {
  tokens?: string[];
  events?: number[][];
  values?: number[][];
  label?: number;
}

export interface EditPayload {
  op: "create" | "revise" | "delete";
  prototype_id?: number;
  sequence?: SequencePayload;
}

/** Error carrying the HTTP status so callers can branch on 409 conflicts. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class SteeringApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = JSON.parse(body).detail ?? body;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, String(detail));
    }
    return JSON.parse(body);
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async board(): Promise<Board> {
    return BoardSchema.parse(await this.request("/v1/prototypes"));
  }

  async neighbors(prototypeId: number, n = 5): Promise<Neighbors> {
    return NeighborsSchema.parse(
      await this.request(`/v1/prototypes/${prototypeId}/neighbors?n=${n}`),
    );
  }

  async predict(sequence: SequencePayload): Promise<Prediction> {
    return PredictionSchema.parse(await this.post("/v1/predict", { sequence }));
  }

  async submitEdit(edit: EditPayload): Promise<{ ok: boolean; k: number }> {
    const body = await this.post("/v1/edits", edit);
    return z.object({ ok: z.boolean(), k: z.number().int() }).parse(body);
  }

  async startFinetune(epochs: number, seed = 0): Promise<Job> {
    return JobSchema.parse(await this.post("/v1/finetune", { epochs, seed }));
  }

  async job(jobId: number): Promise<Job> {
    return JobSchema.parse(await this.request(`/v1/jobs/${jobId}`));
  }
}
