"""Mini-batch SGD with gradient clipping, LR decay, and prototype projection.

Every few epochs (and always once at the end of training) each prototype
vector is snapped to the embedding of its nearest training sequence, which
gives it a readable provenance. When simplification is enabled, beam
search over subsequences replaces the plain projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .autodiff import gradients
from .data import Dataset, evaluate_metrics
from .encoder import Encoder, EncoderConfig
from .model import PrototypeModel
from .objective import Hyperparams, total_loss


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainState:
    epochs: int = 0
    steps: int = 0
    lr: float = 0.0
    seed: int = 0
    loss_history: list = field(default_factory=list)  # per-epoch breakdowns
    projection_log: list = field(default_factory=list)  # epochs where projection ran
    clamp_violations: int = 0  # negative W entries seen *before* clamping


def build_model(dataset: Dataset, hp: Hyperparams, rng: np.random.Generator) -> PrototypeModel:
    if dataset.schema == "text":
        step_kind, width = "token", dataset.vocab_size
    elif dataset.schema == "events":
        step_kind, width = "multihot", dataset.step_width
    else:
        step_kind, width = "real", dataset.step_width
    config = EncoderConfig(
        cell=hp.cell,
        hidden=hp.hidden,
        layers=hp.layers,
        bidirectional=hp.bidirectional,
        step_kind=step_kind,
        input_width=width,
        embed_dim=hp.embed_dim,
        dropout=hp.dropout,
    )
    encoder = Encoder(config, rng)
    meta = {
        "schema": dataset.schema,
        "vocab": dataset.vocab,
        "class_names": dataset.class_names,
        "step_width": dataset.step_width,
    }
    model = PrototypeModel(encoder, hp.k, dataset.num_classes, dataset.mode, rng=rng, meta=meta)
    # prototypes start as k distinct training-sequence embeddings
    train = dataset.split("train")
    picks = rng.choice(len(train), size=hp.k, replace=False)
    seed_seqs = [train[i] for i in picks]
    model.P.value = model.embed_sequences(seed_seqs).copy()
    model.provenance = list(seed_seqs)
    return model


def clip_gradients(grads: dict, clip_norm: float) -> float:
    """Rescale the global gradient to L2 norm <= clip_norm; returns the
    pre-clip norm."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if clip_norm > 0 and total > clip_norm:
        scale = clip_norm / total
        for g in grads.values():
            g *= scale
    return total


def sgd_step(model: PrototypeModel, grads: dict, lr: float, pinned: bool = False) -> int:
    for name, tensor in model.trainable(pinned=pinned).items():
        tensor.value -= lr * grads[name]
    violations = model.clamp_weights()
    return violations


def project_prototypes(model: PrototypeModel, sequences) -> list:
    """Snap each prototype to its nearest training embedding (ties -> lowest
    dataset index) and record the winning sequence as provenance."""
    if not sequences:
        raise TrainingError("cannot project against an empty dataset")
    embeddings = model.embed_sequences(sequences)
    assignments = []
    for i in range(model.k):
        d2 = np.sum((embeddings - model.P.value[i]) ** 2, axis=1)
        j = int(np.argmin(d2))
        model.P.value[i] = embeddings[j]
        model.provenance[i] = sequences[j]
        assignments.append(j)
    return assignments


def _check_finite(breakdown: dict, epoch: int, step: int) -> None:
    for term, value in breakdown.items():
        if not np.isfinite(value):
            raise TrainingError(
                f"non-finite loss term {term!r} ({value}) at epoch {epoch}, step {step}"
            )


def train(
    dataset: Dataset,
    hp: Hyperparams,
    seed: int = 0,
    log_path=None,
    model: PrototypeModel = None,
    pinned: bool = False,
    epochs: int = None,
    simplify_fn=None,
    on_epoch=None,
) -> tuple:
    """Train (or fine-tune, with `pinned=True`) a prototype model.

    Returns (model, TrainState). With `pinned=True` the prototype matrix
    is a pure function of (encoder, provenance) at every step and no
    projection runs.
    """
    train_seqs = dataset.split("train")
    if not train_seqs:
        raise TrainingError("empty training split")
    if hp.k > len(train_seqs) and model is None:
        raise TrainingError(f"k={hp.k} exceeds the {len(train_seqs)} training sequences")
    rng = np.random.default_rng(seed)
    if model is None:
        model = build_model(dataset, hp, rng)
    val_seqs = dataset.split("val")
    state = TrainState(seed=seed)
    n_epochs = hp.epochs if epochs is None else epochs
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None

    if pinned:
        model.refresh_pinned()

    try:
        for epoch in range(1, n_epochs + 1):
            lr = hp.learning_rate(epoch)
            order = rng.permutation(len(train_seqs))
            sums = {"ce": 0.0, "r_c": 0.0, "r_e": 0.0, "r_d": 0.0, "l1": 0.0, "total": 0.0}
            for start in range(0, len(order), hp.batch_size):
                batch = [train_seqs[i] for i in order[start : start + hp.batch_size]]
                loss, breakdown = total_loss(
                    model, batch, hp, train=True, rng=rng, pinned=pinned
                )
                _check_finite(breakdown, epoch, state.steps)
                params = model.trainable(pinned=pinned)
                grads = gradients(loss, params)
                clip_gradients(grads, hp.clip_norm)
                state.clamp_violations += sgd_step(model, grads, lr, pinned=pinned)
                state.steps += 1
                for key in sums:
                    sums[key] += breakdown[key]
            if pinned:
                model.refresh_pinned()
            elif hp.projection_cadence > 0 and epoch % hp.projection_cadence == 0:
                if simplify_fn is not None:
                    simplify_fn(model, train_seqs)
                else:
                    project_prototypes(model, train_seqs)
                state.projection_log.append(epoch)
            record = {"epoch": epoch, "lr": lr, **sums}
            if val_seqs:
                scores = model.predict(val_seqs)
                record.update(
                    {
                        f"val_{k}": v
                        for k, v in evaluate_metrics(
                            scores, [s.label for s in val_seqs], model.mode
                        ).items()
                    }
                )
            state.loss_history.append(record)
            state.epochs = epoch
            state.lr = lr
            if log_file:
                log_file.write(json.dumps(record) + "\n")
                log_file.flush()
            if on_epoch is not None:
                on_epoch(epoch, record)

        if pinned:
            model.refresh_pinned()
        else:
            # final projection (or simplification) so every prototype ships
            # with provenance and P = r(provenance)
            if simplify_fn is not None:
                simplify_fn(model, train_seqs)
            else:
                project_prototypes(model, train_seqs)
            if n_epochs not in state.projection_log:
                state.projection_log.append(n_epochs)
    finally:
        if log_file:
            log_file.close()
    return model, state
