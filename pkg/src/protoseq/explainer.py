"""Prototype-based explanations, weak-prototype pruning, and neighborhoods.

An explanation is the forward pass itself, read out: the logits are the
weighted sum of the similarity to each prototype times that prototype's
weight column, so listing the most similar prototypes with their weights
is a faithful account of the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PrototypeModel


class ExplainError(ValueError):
    pass


@dataclass
class Contribution:
    prototype_id: int
    similarity: float
    weights: np.ndarray  # this prototype's column of W
    provenance: object  # Sequence


@dataclass
class Explanation:
    sequence: object
    scores: np.ndarray
    predicted_class: int
    contributions: list  # top-n, similarity-descending
    similarities: np.ndarray  # all k similarities
    logits: np.ndarray


def explain(
    model: PrototypeModel, sequence, top_n: int = 3, min_similarity: float = 0.0
) -> Explanation:
    scores, A, Z, _ = model.forward_batch([sequence.steps])
    a = A.value[0]
    order = np.argsort(-a, kind="stable")
    contributions = []
    for i in order[:top_n]:
        if a[i] < min_similarity:
            break
        contributions.append(
            Contribution(int(i), float(a[i]), model.W.value[:, i].copy(), model.provenance[i])
        )
    return Explanation(
        sequence=sequence,
        scores=scores[0],
        predicted_class=int(np.argmax(scores[0])),
        contributions=contributions,
        similarities=a,
        logits=Z.value[0],
    )


def render_explanation(model: PrototypeModel, exp: Explanation, weight_floor: float = 0.05) -> str:
    """Block layout: input line, prediction line, then one
    `similarity * provenance (label:weight ...)` line per contribution."""
    lines = [
        f"Input: {exp.sequence.text()}",
        f"Prediction: {model.class_name(exp.predicted_class)}",
    ]
    indent = " " * (len("Explanation:") - len("+")) + "+ "
    for n, c in enumerate(exp.contributions):
        shown = [
            f"{model.class_name(ci)}:{w:.1f}"
            for ci, w in enumerate(c.weights)
            if w >= weight_floor
        ]
        suffix = f" ({', '.join(shown)})" if shown else ""
        text = c.provenance.text() if c.provenance is not None else f"<prototype {c.prototype_id}>"
        head = "Explanation: " if n == 0 else indent
        lines.append(f"{head}{c.similarity:.2f} * {text}{suffix}")
    return "\n".join(lines)


def prune(model: PrototypeModel, tau: float = 0.1) -> PrototypeModel:
    """Drop prototypes whose max weight falls below tau * max(W), in place."""
    if not 0.0 < tau < 1.0:
        raise ExplainError("tau must be in (0, 1)")
    keep = effective_mask(model, tau)
    if not keep.any():
        raise ExplainError("pruning would remove every prototype")
    model.P.value = model.P.value[keep]
    model.W.value = model.W.value[:, keep]
    model.provenance = [p for p, k in zip(model.provenance, keep) if k]
    return model


def effective_mask(model: PrototypeModel, tau: float = 0.1) -> np.ndarray:
    """True for prototypes with max column weight >= tau * max(W)."""
    w_max = model.W.value.max()
    return model.W.value.max(axis=0) >= tau * w_max


def neighbors(model: PrototypeModel, prototype_id: int, sequences, n: int = 5) -> list:
    """The n sequences most similar to the prototype, similarity-descending.

    Returns [(sequence, similarity), ...].
    """
    if not 0 <= prototype_id < model.k:
        raise ExplainError(f"prototype id {prototype_id} out of range")
    if n < 1:
        raise ExplainError("n must be >= 1")
    embeddings = model.embed_sequences(sequences)
    d2 = np.sum((embeddings - model.P.value[prototype_id]) ** 2, axis=1)
    sims = np.exp(-d2)
    order = np.argsort(-sims, kind="stable")[:n]
    return [(sequences[i], float(sims[i])) for i in order]
