import type { FetchLike } from "../src/api.js";
import type { StorageLike } from "../src/store.js";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export type Responder = (req: RecordedRequest) => { status: number; body: unknown };

/** fetch stub that records requests and answers from a routing table. */
export function fakeFetch(responder: Responder): {
  fetch: FetchLike;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];
  const fetch: FetchLike = async (url, init) => {
    const req: RecordedRequest = {
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    requests.push(req);
    const { status, body } = responder(req);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch, requests };
}

export function memoryStorage(initial: Record<string, string> = {}): StorageLike & {
  data: Map<string, string>;
} {
  const data = new Map(Object.entries(initial));
  return {
    data,
    getItem: (key) => data.get(key) ?? null,
    setItem: (key, value) => void data.set(key, value),
    removeItem: (key) => void data.delete(key),
  };
}

export const sampleBoard = {
  k: 3,
  prototypes: [
    {
      id: 0,
      provenance: "good food but worst service",
      tokens: ["good", "food", "but", "worst", "service"],
      weights: [2.1, 0.0],
      class_names: ["Negative", "Positive"],
      effective: true,
    },
    {
      id: 1,
      provenance: "service is really slow",
      tokens: ["service", "is", "really", "slow"],
      weights: [1.1, 0.0],
      class_names: ["Negative", "Positive"],
      effective: true,
    },
    {
      id: 2,
      provenance: "meh",
      tokens: ["meh"],
      weights: [0.01, 0.02],
      class_names: ["Negative", "Positive"],
      effective: false,
    },
  ],
};
