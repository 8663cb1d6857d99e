/**
 * Commit workflow: submit staged edits in order, start a fine-tune job,
 * and poll it once per second until it finishes.
 *
 * A 409 (another job running) leaves the staged edits untouched so the
 * user can retry after the running job commits.
 */

import { ApiError, type Job, type SteeringApi } from "./api.js";
import type { StagedEdits } from "./store.js";

export const POLL_INTERVAL_MS = 1000;

export interface CommitCallbacks {
  onProgress?: (job: Job) => void;
  onConflict?: (message: string) => void;
}

export type Sleep = (ms: number) => Promise<void>;

const realSleep: Sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export async function pollJob(
  api: SteeringApi,
  jobId: number,
  onProgress?: (job: Job) => void,
  sleep: Sleep = realSleep,
): Promise<Job> {
  for (;;) {
    const job = await api.job(jobId);
    onProgress?.(job);
    if (job.status === "done" || job.status === "failed") return job;
    await sleep(POLL_INTERVAL_MS);
  }
}

export interface CommitResult {
  committed: boolean;
  job?: Job;
  conflict?: string;
}

/**
 * Submit all staged edits in staging order, then fine-tune. Edits are
 * cleared from the store only after everything was accepted; a conflict
 * (409) keeps them staged.
 */
export async function commitAndFinetune(
  api: SteeringApi,
  staged: StagedEdits,
  epochs: number,
  callbacks: CommitCallbacks = {},
  sleep: Sleep = realSleep,
): Promise<CommitResult> {
  try {
    for (const edit of staged.list()) {
      await api.submitEdit(edit);
    }
    const started = await api.startFinetune(epochs);
    staged.markCommitted();
    const job = await pollJob(api, started.id, callbacks.onProgress, sleep);
    return { committed: true, job };
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      callbacks.onConflict?.(error.message);
      return { committed: false, conflict: error.message };
    }
    throw error;
  }
}
