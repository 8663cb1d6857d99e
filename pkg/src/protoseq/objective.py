"""Training objective: cross-entropy plus four interpretability regularizers.

  total = CE + lc * R_c + le * R_e + ld * R_d + l1 * ||W||_1

R_c pulls each encoded instance toward its nearest prototype, R_e pulls
each prototype toward some encoded instance (both evaluated against the
current mini-batch), R_d is a hinge-squared penalty on prototype pairs
closer than d_min, and the L1 term sparsifies the output weights.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .autodiff import Tensor, constant
from .model import PrototypeModel, similarity_matrix, _transpose

EPS = 1e-12


class ConfigError(ValueError):
    pass


@dataclass
class Hyperparams:
    # objective
    k: int = 10
    lambda_c: float = 0.01
    lambda_e: float = 0.1
    lambda_d: float = 0.01
    lambda_l1: float = 1.0
    d_min: float = 1.0
    # simplification
    beam_width: int = 3
    gamma: float = 0.0  # optional length penalty in the subsequence score
    simplify: bool = False
    scan: int = 30  # closest sources descended per prototype (0 = all)
    # optimization
    projection_cadence: int = 4
    lr: float = 1.0
    lr_decay: float = 0.85
    lr_decay_start: int = 10  # constant LR through this epoch, decay after
    clip_norm: float = 5.0
    dropout: float = 0.0
    batch_size: int = 32
    epochs: int = 30
    # encoder architecture
    cell: str = "gru"
    hidden: int = 32
    layers: int = 1
    bidirectional: bool = False
    embed_dim: int = 100

    def __post_init__(self):
        for name in ("lambda_c", "lambda_e", "lambda_d", "lambda_l1"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.d_min <= 0:
            raise ConfigError("d_min must be positive")
        if self.beam_width < 1:
            raise ConfigError("beam_width must be >= 1")
        if self.scan < 0:
            raise ConfigError("scan must be >= 0")
        if self.k < 1:
            raise ConfigError("k must be >= 1")

    def learning_rate(self, epoch: int) -> float:
        """Epochs are 1-indexed; decay kicks in after `lr_decay_start`."""
        if epoch <= self.lr_decay_start:
            return self.lr
        return self.lr * self.lr_decay ** (epoch - self.lr_decay_start)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for name, value in self.to_dict().items():
                if isinstance(value, bool):
                    value = "true" if value else "false"
                f.write(f"{name} = {value}\n")

    @classmethod
    def load(cls, path) -> "Hyperparams":
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in known:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _parse_value(raw, known[key], key)
        return cls(**values)


def _parse_value(raw: str, typ, key: str):
    if typ in (bool, "bool"):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected boolean, got {raw!r}")
    if typ in (int, "int"):
        return int(raw)
    if typ in (float, "float"):
        return float(raw)
    return raw


# -- loss terms ---------------------------------------------------------------


def classification_loss(Z: Tensor, labels, mode: str, num_classes: int) -> Tensor:
    """Summed cross-entropy over the batch (categorical or per-class binary).

    Probabilities are clamped to [EPS, 1 - EPS] before any log.
    """
    B = Z.shape[0]
    if mode == "multiclass":
        shift = constant(Z.value.max(axis=1, keepdims=True))
        zs = Z - shift
        logp = zs - zs.exp().sum(axis=1, keepdims=True).log()
        probs = logp.exp().clip(EPS, 1.0 - EPS)
        y = np.asarray(labels, dtype=np.intp)
        picked = probs[np.arange(B), y].log()
        return -picked.sum()
    # multilabel: per-class binary cross-entropy
    target = np.zeros((B, num_classes))
    for b, labs in enumerate(labels):
        for c in labs:
            target[b, c] = 1.0
    yhat = Z.sigmoid().clip(EPS, 1.0 - EPS)
    t = constant(target)
    tc = constant(1.0 - target)
    return -(t * yhat.log() + tc * (1.0 - yhat).log()).sum()


def regularizers(P: Tensor, E: Tensor, W: Tensor, d_min: float) -> dict:
    """R_c, R_e, R_d and L1 as graph Tensors.

    The min terms route gradients to the unique argmin (ties broken toward
    the lowest index, numpy argmin semantics).
    """
    pv, ev = P.value, E.value
    d2 = (
        (ev * ev).sum(axis=1)[:, None]
        + (pv * pv).sum(axis=1)[None, :]
        - 2.0 * (ev @ pv.T)
    )
    nearest_proto = np.argmin(d2, axis=1)  # per batch row
    nearest_example = np.argmin(d2, axis=0)  # per prototype

    dc = E - P[nearest_proto]
    r_c = (dc * dc).sum()
    de = P - E[nearest_example]
    r_e = (de * de).sum()

    k = P.shape[0]
    if k > 1:
        iu, ju = np.triu_indices(k, 1)
        diff = P[iu] - P[ju]
        dist = (diff * diff).sum(axis=1).sqrt()
        hinge = (constant(np.full(len(iu), d_min)) - dist).relu()
        r_d = (hinge * hinge).sum()
    else:
        r_d = constant(0.0)

    l1 = W.abs().sum()
    return {"r_c": r_c, "r_e": r_e, "r_d": r_d, "l1": l1}


def total_loss(
    model: PrototypeModel,
    batch,
    hp: Hyperparams,
    train: bool = False,
    rng=None,
    pinned: bool = False,
):
    """Full objective on a mini-batch; returns (loss Tensor, breakdown dict).

    `batch` is a list of Sequence. With `pinned=True` prototypes are
    rebuilt in-graph from provenance (refinement fine-tuning).
    """
    E = model.encoder.encode_batch([s.steps for s in batch], train=train, rng=rng)
    P = model.pinned_prototypes(train=False) if pinned else model.P
    A = similarity_matrix(E, P)
    Z = A @ _transpose(model.W)
    labels = [s.label for s in batch]
    ce = classification_loss(Z, labels, model.mode, model.num_classes)
    regs = regularizers(P, E, model.W, hp.d_min)
    loss = (
        ce
        + hp.lambda_c * regs["r_c"]
        + hp.lambda_e * regs["r_e"]
        + hp.lambda_d * regs["r_d"]
        + hp.lambda_l1 * regs["l1"]
    )
    breakdown = {
        "ce": float(ce.value),
        "r_c": float(regs["r_c"].value),
        "r_e": float(regs["r_e"].value),
        "r_d": float(regs["r_d"].value),
        "l1": float(regs["l1"].value),
        "total": float(loss.value),
    }
    return loss, breakdown
