"""Prototype sequence classifier: encoder -> similarity layer -> linear -> softmax.

A prediction for a sequence is a non-negative weighted combination of its
similarities to k learned prototype vectors; each prototype carries a
provenance (sub)sequence from the training data so predictions can be
explained by analogy.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict

import numpy as np

from .autodiff import GraphError, Tensor, gaussian_kernel, parameter
from .data import Sequence
from .encoder import Encoder, EncoderConfig

CHECKPOINT_VERSION = 1


class ModelError(ValueError):
    pass


def similarity_matrix(embeddings: Tensor, prototypes: Tensor) -> Tensor:
    """a[b, i] = exp(-||e_b - p_i||^2), in (0, 1], 1 iff e_b == p_i."""
    return gaussian_kernel(embeddings, prototypes)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


class PrototypeModel:
    def __init__(
        self,
        encoder: Encoder,
        num_prototypes: int,
        num_classes: int,
        mode: str = "multiclass",
        rng: np.random.Generator = None,
        meta: dict = None,
    ):
        if num_prototypes < 1:
            raise ModelError("need at least one prototype")
        if mode not in ("multiclass", "multilabel"):
            raise ModelError(f"unknown mode {mode!r}")
        self.encoder = encoder
        self.mode = mode
        self.num_classes = num_classes
        m = encoder.config.embedding_dim
        rng = rng or np.random.default_rng(0)
        self.P = parameter(rng.uniform(-1.0, 1.0, (num_prototypes, m)))
        self.W = parameter(rng.uniform(0.0, 1.0 / num_prototypes, (num_classes, num_prototypes)))
        self.provenance: list = [None] * num_prototypes
        # dataset-facing metadata: schema, vocab, class_names, step_width
        self.meta = dict(meta or {})

    # -- structure ---------------------------------------------------------

    @property
    def k(self) -> int:
        return self.P.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.P.shape[1]

    def trainable(self, pinned: bool = False) -> dict:
        """Named trainable leaves. With `pinned=True` the prototype matrix
        is excluded (it is recomputed from provenance each iteration)."""
        params = dict(self.encoder.params)
        params["W"] = self.W
        if not pinned:
            params["P"] = self.P
        return params

    def clamp_weights(self) -> int:
        """Project W onto the non-negative orthant; returns #clamped entries."""
        negative = int(np.sum(self.W.value < 0))
        if negative:
            np.maximum(self.W.value, 0.0, out=self.W.value)
        return negative

    # -- forward -----------------------------------------------------------

    def forward_batch(self, batch_steps, train: bool = False, rng=None, pinned: bool = False):
        """Returns (scores ndarray, similarities Tensor, logits Tensor).

        With `pinned=True`, prototype vectors are rebuilt in-graph as the
        encodings of their provenance sequences, so encoder gradients flow
        through the prototype path and P tracks the encoder exactly.
        """
        E = self.encoder.encode_batch(batch_steps, train=train, rng=rng)
        if pinned:
            P = self.pinned_prototypes(train=False)
        else:
            P = self.P
        if E.shape[1] != P.shape[1]:
            raise GraphError(f"embedding dim {E.shape[1]} != prototype dim {P.shape[1]}")
        A = similarity_matrix(E, P)
        Z = A @ _transpose(self.W)
        scores = softmax(Z.value) if self.mode == "multiclass" else sigmoid(Z.value)
        return scores, A, Z, E

    def pinned_prototypes(self, train: bool = False) -> Tensor:
        if any(p is None for p in self.provenance):
            raise ModelError("pinned forward requires provenance for every prototype")
        return self.encoder.encode_batch([p.steps for p in self.provenance], train=train)

    def refresh_pinned(self) -> None:
        """Set P = r(provenance) under the current encoder (no gradients)."""
        self.P.value = self.pinned_prototypes().value.copy()

    def embed_sequences(self, sequences, chunk: int = 256) -> np.ndarray:
        """Embeddings for a list of sequences, computed in chunks."""
        out = []
        for start in range(0, len(sequences), chunk):
            part = sequences[start : start + chunk]
            out.append(self.encoder.encode_batch([s.steps for s in part]).value)
        return np.concatenate(out, axis=0)

    def predict(self, sequences) -> np.ndarray:
        scores, _, _, _ = self.forward_batch([s.steps for s in sequences])
        return scores

    def similarities(self, sequences) -> np.ndarray:
        _, A, _, _ = self.forward_batch([s.steps for s in sequences])
        return A.value

    # -- persistence ---------------------------------------------------------

    def save(self, path, hyperparams: dict = None) -> None:
        """Write a versioned checkpoint atomically (write-then-rename)."""
        arrays = {f"enc_{k}": v for k, v in self.encoder.state_arrays().items()}
        arrays["P"] = self.P.value.copy()
        arrays["W"] = self.W.value.copy()
        meta = {
            "version": CHECKPOINT_VERSION,
            "mode": self.mode,
            "num_classes": self.num_classes,
            "num_prototypes": self.k,
            "encoder": asdict(self.encoder.config),
            "provenance": [_sequence_to_json(s) for s in self.provenance],
            "hyperparams": hyperparams or {},
            "meta": self.meta,
        }
        arrays["meta_json"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".ckpt.tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                np.savez(f, **arrays)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path) -> "PrototypeModel":
        with np.load(path) as z:
            arrays = {k: z[k] for k in z.files}
        meta = json.loads(bytes(arrays.pop("meta_json")).decode("utf-8"))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ModelError(f"unsupported checkpoint version {meta['version']}")
        config = EncoderConfig(**meta["encoder"])
        encoder = Encoder(config, np.random.default_rng(0))
        encoder.load_state_arrays({k[4:]: v for k, v in arrays.items() if k.startswith("enc_")})
        model = cls(
            encoder,
            meta["num_prototypes"],
            meta["num_classes"],
            meta["mode"],
            meta=meta.get("meta"),
        )
        model.P.value = np.asarray(arrays["P"], dtype=np.float64)
        model.W.value = np.asarray(arrays["W"], dtype=np.float64)
        model.provenance = [_sequence_from_json(s) for s in meta["provenance"]]
        model.loaded_hyperparams = meta.get("hyperparams", {})
        return model

    # -- input mapping ---------------------------------------------------------

    def sequence_from_tokens(self, tokens: list) -> Sequence:
        vocab = self.meta.get("vocab")
        if not vocab:
            raise ModelError("model has no vocabulary; token input unsupported")
        index = {t: i for i, t in enumerate(vocab)}
        steps = np.array([index.get(t, 0) for t in tokens], dtype=np.intp)
        return Sequence(steps, None, list(tokens))

    def class_name(self, c: int) -> str:
        names = self.meta.get("class_names")
        if names and c < len(names):
            return names[c]
        return f"Class {c + 1}"


def _transpose(t: Tensor) -> Tensor:
    # W is (C, k); logits need A (B, k) @ W^T (k, C)
    return Tensor(
        t.value.T,
        _parents=(t,),
        _backward=lambda g: (g.T,),
        op="transpose",
    )


def _sequence_to_json(s) -> dict:
    if s is None:
        return None
    rec = {"split": s.split}
    if s.tokens is not None:
        rec["tokens"] = list(s.tokens)
        rec["steps"] = [int(i) for i in s.steps]
    elif s.steps.ndim == 1:
        rec["steps"] = [int(i) for i in s.steps]
    else:
        rec["values"] = [[float(v) for v in row] for row in s.steps]
    if isinstance(s.label, frozenset):
        rec["labels"] = sorted(int(c) for c in s.label)
    elif s.label is not None:
        rec["label"] = int(s.label)
    return rec


def _sequence_from_json(rec) -> Sequence:
    if rec is None:
        return None
    if "values" in rec:
        steps = np.asarray(rec["values"], dtype=np.float64)
    else:
        steps = np.array(rec["steps"], dtype=np.intp)
    label = None
    if "labels" in rec:
        label = frozenset(rec["labels"])
    elif "label" in rec:
        label = rec["label"]
    return Sequence(steps, label, rec.get("tokens"), rec.get("split", "train"))
