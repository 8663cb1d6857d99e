/**
 * Staged-edit store. Edits are queued locally (and survive page reloads
 * via storage) until the user commits them; committing submits them in
 * staging order and then launches a fine-tune job.
 */

import type { EditPayload } from "./api.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "protoseq.stagedEdits.v1";

export class StagedEdits {
  private edits: EditPayload[] = [];

  constructor(private readonly storage: StorageLike) {
    const raw = storage.getItem(STORAGE_KEY);
    if (raw !== null) {
      try {
        const parsed = JSON.parse(raw);
        if (Array.isArray(parsed)) this.edits = parsed as EditPayload[];
      } catch {
        storage.removeItem(STORAGE_KEY);
      }
    }
  }

  list(): readonly EditPayload[] {
    return this.edits;
  }

  get count(): number {
    return this.edits.length;
  }

  stage(edit: EditPayload): void {
    this.edits.push(edit);
    this.persist();
  }

  unstage(index: number): void {
    this.edits.splice(index, 1);
    this.persist();
  }

  discardAll(): void {
    this.edits = [];
    this.storage.removeItem(STORAGE_KEY);
  }

  /** Called only after every edit was accepted by the service. */
  markCommitted(): void {
    this.discardAll();
  }

  private persist(): void {
    this.storage.setItem(STORAGE_KEY, JSON.stringify(this.edits));
  }
}

export function describeEdit(edit: EditPayload): string {
  switch (edit.op) {
    case "delete":
      return `delete prototype ${edit.prototype_id}`;
    case "revise":
      return `revise prototype ${edit.prototype_id} → "${(edit.sequence?.tokens ?? []).join(" ")}"`;
    case "create":
      return `create prototype from "${(edit.sequence?.tokens ?? []).join(" ")}"`;
  }
}
