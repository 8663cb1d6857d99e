/**
 * Steering UI entry point. Wires the typed API client, the persistent
 * staged-edit store, and the pure view functions onto the static page in
 * public/index.html.
 */

import { ApiError, SteeringApi } from "./api.js";
import { commitAndFinetune } from "./jobs.js";
import { StagedEdits } from "./store.js";
import {
  renderBanner,
  renderBoard,
  renderJob,
  renderNeighbors,
  renderPrediction,
  renderStagedEdits,
} from "./views.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

export function bootstrap(baseUrl: string = ""): void {
  const api = new SteeringApi(baseUrl || window.location.origin);
  const staged = new StagedEdits(window.localStorage);
  let selectedId: number | null = null;

  const boardEl = el("board");
  const neighborsEl = el("neighbors");
  const stagedEl = el("staged");
  const statusEl = el("status");
  const playgroundOut = el("playground-output");

  async function refreshBoard(): Promise<void> {
    try {
      const board = await api.board();
      boardEl.innerHTML = renderBoard(board, selectedId);
    } catch (error) {
      boardEl.innerHTML = renderBanner(`service unreachable: ${String(error)}`);
    }
  }

  function refreshStaged(): void {
    stagedEl.innerHTML = renderStagedEdits(staged.list());
  }

  boardEl.addEventListener("click", async (event) => {
    const card = (event.target as HTMLElement).closest<HTMLElement>("[data-id]");
    if (!card) return;
    selectedId = Number(card.dataset.id);
    await refreshBoard();
    try {
      neighborsEl.innerHTML = renderNeighbors(await api.neighbors(selectedId));
    } catch (error) {
      neighborsEl.innerHTML = renderBanner(String(error));
    }
  });

  el("stage-delete").addEventListener("click", () => {
    if (selectedId === null) return;
    staged.stage({ op: "delete", prototype_id: selectedId });
    refreshStaged();
  });

  el("stage-revise").addEventListener("click", () => {
    if (selectedId === null) return;
    const text = (el("edit-text") as HTMLInputElement).value.trim();
    if (!text) return;
    staged.stage({
      op: "revise",
      prototype_id: selectedId,
      sequence: { tokens: text.split(/\s+/) },
    });
    refreshStaged();
  });

  el("stage-create").addEventListener("click", () => {
    const text = (el("edit-text") as HTMLInputElement).value.trim();
    if (!text) return;
    staged.stage({ op: "create", sequence: { tokens: text.split(/\s+/) } });
    refreshStaged();
  });

  el("discard").addEventListener("click", () => {
    staged.discardAll();
    refreshStaged();
  });

  el("commit").addEventListener("click", async () => {
    const epochs = Number((el("epochs") as HTMLInputElement).value) || 5;
    const result = await commitAndFinetune(api, staged, epochs, {
      onProgress: (job) => {
        statusEl.innerHTML = renderJob(job);
      },
      onConflict: (message) => {
        statusEl.innerHTML = renderBanner(message);
      },
    });
    refreshStaged();
    if (result.committed) await refreshBoard();
  });

  el("predict").addEventListener("click", async () => {
    const text = (el("playground-input") as HTMLInputElement).value.trim();
    if (!text) return;
    try {
      const prediction = await api.predict({ tokens: text.split(/\s+/) });
      playgroundOut.innerHTML = renderPrediction(prediction);
    } catch (error) {
      const message = error instanceof ApiError ? error.message : String(error);
      playgroundOut.innerHTML = renderBanner(message);
    }
  });

  refreshStaged();
  void refreshBoard();
}

declare global {
  interface Window {
    protoseqBootstrap: typeof bootstrap;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.protoseqBootstrap = bootstrap;
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => bootstrap());
  } else if (document.getElementById("board")) {
    bootstrap();
  }
}
