"""Human-in-the-loop steering: create/revise/delete prototypes, then
fine-tune with prototypes pinned to their provenance sequences.

During pinned fine-tuning the prototype matrix is never a free parameter:
each iteration recomputes P = r(provenance) under the current encoder, and
the projection step is skipped entirely.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Sequence
from .model import PrototypeModel, _sequence_to_json
from .objective import Hyperparams
from .trainer import TrainState, train


class EditError(ValueError):
    pass


@dataclass
class RefinementEdit:
    kind: str  # "create" | "revise" | "delete"
    prototype_id: int = None  # revise/delete
    sequence: Sequence = None  # create/revise

    def __post_init__(self):
        if self.kind not in ("create", "revise", "delete"):
            raise EditError(f"unknown edit kind {self.kind!r}")
        if self.kind in ("revise", "delete") and self.prototype_id is None:
            raise EditError(f"{self.kind} needs a prototype id")
        if self.kind in ("create", "revise") and self.sequence is None:
            raise EditError(f"{self.kind} needs a sequence payload")


def apply_edit(model: PrototypeModel, edit: RefinementEdit) -> PrototypeModel:
    """Apply one edit in place; a failed edit leaves the model untouched."""
    if edit.kind in ("revise", "delete"):
        if not 0 <= edit.prototype_id < model.k:
            raise EditError(f"prototype id {edit.prototype_id} out of range (k={model.k})")
    if edit.kind == "delete":
        if model.k == 1:
            raise EditError("cannot delete the last prototype")
        keep = np.arange(model.k) != edit.prototype_id
        model.P.value = model.P.value[keep]
        model.W.value = model.W.value[:, keep]
        del model.provenance[edit.prototype_id]
        return model

    embedding = model.encoder.encode_batch([edit.sequence.steps]).value[0]
    if edit.kind == "create":
        model.P.value = np.vstack([model.P.value, embedding[None, :]])
        # new prototypes start with zero weight and earn influence in training
        model.W.value = np.hstack([model.W.value, np.zeros((model.num_classes, 1))])
        model.provenance.append(edit.sequence)
    else:  # revise: embedding and provenance replaced, weight column kept
        model.P.value[edit.prototype_id] = embedding
        model.provenance[edit.prototype_id] = edit.sequence
    return model


def finetune(
    model: PrototypeModel,
    dataset: Dataset,
    hp: Hyperparams,
    epochs: int,
    seed: int = 0,
    log_path=None,
    on_epoch=None,
) -> tuple:
    """Pinned fine-tuning after edits; returns (model, TrainState)."""
    if any(p is None for p in model.provenance):
        raise EditError("fine-tuning requires provenance for every prototype")
    if epochs == 0:
        model.refresh_pinned()
        return model, TrainState(seed=seed)
    return train(
        dataset,
        hp,
        seed=seed,
        log_path=log_path,
        model=model,
        pinned=True,
        epochs=epochs,
        on_epoch=on_epoch,
    )


def append_journal(path, edit: RefinementEdit) -> None:
    """Append-only edit journal, one JSON record per line."""
    record = {"op": edit.kind, "time": time.time()}
    if edit.prototype_id is not None:
        record["prototype_id"] = edit.prototype_id
    if edit.sequence is not None:
        record["sequence"] = _sequence_to_json(edit.sequence)
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record) + "\n")
