"""Recurrent sequence encoder: variable-length sequences -> fixed embedding.

Supports LSTM and GRU cells, stacked layers, uni- or bidirectional reads.
Token steps go through a jointly trained embedding table (row 0 reserved
for UNK); multi-hot and real-valued steps are used as-is. The embedding of
a sequence is the last hidden state (both directions concatenated when
bidirectional), so the embedding width m = hidden (uni) or 2*hidden (bi).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, concat, constant, parameter


class EncoderError(ValueError):
    pass


@dataclass
class EncoderConfig:
    cell: str = "gru"  # "lstm" | "gru"
    hidden: int = 32
    layers: int = 1
    bidirectional: bool = False
    step_kind: str = "token"  # "token" | "multihot" | "real"
    input_width: int = 0  # vocab size for tokens, vector width otherwise
    embed_dim: int = 100  # token embedding width; ignored for vector steps
    dropout: float = 0.0  # between stacked layers only

    @property
    def embedding_dim(self) -> int:
        return self.hidden * (2 if self.bidirectional else 1)

    @property
    def step_width(self) -> int:
        return self.embed_dim if self.step_kind == "token" else self.input_width


def _gate_count(cell: str) -> int:
    if cell == "lstm":
        return 4
    if cell == "gru":
        return 3
    raise EncoderError(f"unknown cell kind: {cell!r}")


class Encoder:
    """Holds all encoder weights as trainable Tensors."""

    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        self.params: dict[str, Tensor] = {}
        c = config
        if c.input_width <= 0:
            raise EncoderError("input_width must be positive")
        if c.step_kind == "token":
            scale = 1.0 / np.sqrt(c.embed_dim)
            self._add("embedding", rng.uniform(-scale, scale, (c.input_width, c.embed_dim)))
        g = _gate_count(c.cell)
        directions = ("fw", "bw") if c.bidirectional else ("fw",)
        for layer in range(c.layers):
            in_w = c.step_width if layer == 0 else c.hidden * len(directions)
            scale = 1.0 / np.sqrt(c.hidden)
            for d in directions:
                pre = f"l{layer}_{d}"
                self._add(f"{pre}_wih", rng.uniform(-scale, scale, (in_w, g * c.hidden)))
                self._add(f"{pre}_whh", rng.uniform(-scale, scale, (c.hidden, g * c.hidden)))
                self._add(f"{pre}_bih", rng.uniform(-scale, scale, g * c.hidden))
                self._add(f"{pre}_bhh", rng.uniform(-scale, scale, g * c.hidden))

    def _add(self, name: str, value: np.ndarray):
        self.params[name] = parameter(value)

    # -- persistence ------------------------------------------------------

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.value.copy() for name, t in self.params.items()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, t in self.params.items():
            t.value = np.asarray(arrays[name], dtype=np.float64)

    # -- forward ----------------------------------------------------------

    def embed_steps(self, batch_steps, lengths) -> tuple[list[Tensor], np.ndarray]:
        """Turn a batch of step arrays into per-timestep input Tensors.

        Returns (inputs, mask) where inputs[t] is (B, step_width) and
        mask is (T, B, 1) with 1.0 where step t is a real step.
        """
        c = self.config
        B = len(batch_steps)
        T = int(max(lengths))
        mask = np.zeros((T, B, 1))
        for b, L in enumerate(lengths):
            mask[:L, b, 0] = 1.0
        if c.step_kind == "token":
            ids = np.zeros((T, B), dtype=np.intp)
            for b, steps in enumerate(batch_steps):
                safe = np.where(steps < c.input_width, steps, 0)  # OOV -> UNK row 0
                ids[: lengths[b], b] = safe
            table = self.params["embedding"]
            inputs = [table[ids[t]] for t in range(T)]
        else:
            x = np.zeros((T, B, c.input_width))
            for b, steps in enumerate(batch_steps):
                x[: lengths[b], b, :] = steps
            inputs = [constant(x[t]) for t in range(T)]
        return inputs, mask

    def _run_direction(self, inputs, mask, layer: int, direction: str, order) -> list[Tensor]:
        """Run one recurrent layer over the given timestep order; returns
        hidden states in original time order."""
        c = self.config
        B = inputs[0].shape[0]
        pre = f"l{layer}_{direction}"
        wih, whh = self.params[f"{pre}_wih"], self.params[f"{pre}_whh"]
        bih, bhh = self.params[f"{pre}_bih"], self.params[f"{pre}_bhh"]
        h = constant(np.zeros((B, c.hidden)))
        cstate = constant(np.zeros((B, c.hidden)))
        H = c.hidden
        out: list = [None] * len(inputs)
        for t in order:
            m = constant(mask[t])
            keep = constant(1.0 - mask[t])
            x = inputs[t]
            if c.cell == "lstm":
                gates = x @ wih + h @ whh + bih + bhh
                i = gates[:, 0:H].sigmoid()
                f = gates[:, H : 2 * H].sigmoid()
                g = gates[:, 2 * H : 3 * H].tanh()
                o = gates[:, 3 * H : 4 * H].sigmoid()
                c_new = f * cstate + i * g
                h_new = o * c_new.tanh()
                cstate = m * c_new + keep * cstate
            else:  # gru
                gi = x @ wih + bih
                gh = h @ whh + bhh
                r = (gi[:, 0:H] + gh[:, 0:H]).sigmoid()
                z = (gi[:, H : 2 * H] + gh[:, H : 2 * H]).sigmoid()
                n = (gi[:, 2 * H : 3 * H] + r * gh[:, 2 * H : 3 * H]).tanh()
                h_new = (constant(np.ones((B, H))) - z) * n + z * h
            h = m * h_new + keep * h
            out[t] = h
        return out

    def encode_batch(self, batch_steps, train: bool = False, rng=None) -> Tensor:
        """Encode a batch of sequences; returns (B, m) embeddings.

        `batch_steps` is a list of per-sequence step arrays (int ids of
        shape (T,) for tokens, float arrays of shape (T, n) otherwise).
        """
        lengths = np.array([len(s) for s in batch_steps], dtype=np.intp)
        if len(batch_steps) == 0 or np.any(lengths < 1):
            raise EncoderError("cannot encode an empty sequence")
        c = self.config
        inputs, mask = self.embed_steps(batch_steps, lengths)
        T, B = mask.shape[0], mask.shape[1]
        fwd_order = range(T)
        bwd_order = range(T - 1, -1, -1)
        finals = []
        for layer in range(c.layers):
            if layer > 0 and train and c.dropout > 0.0:
                if rng is None:
                    raise EncoderError("training dropout requires an RNG")
                drop = (rng.random((B, inputs[0].shape[1])) >= c.dropout) / (1.0 - c.dropout)
                dmask = constant(drop)
                inputs = [x * dmask for x in inputs]
            hs_fw = self._run_direction(inputs, mask, layer, "fw", fwd_order)
            if c.bidirectional:
                hs_bw = self._run_direction(inputs, mask, layer, "bw", bwd_order)
                inputs = [concat([f, b], axis=1) for f, b in zip(hs_fw, hs_bw)]
                last_fw = _gather_last(hs_fw, lengths)
                # backward direction's "last" state is at t=0 in time order
                finals = [last_fw, hs_bw[0]]
            else:
                inputs = hs_fw
                finals = [_gather_last(hs_fw, lengths)]
        return concat(finals, axis=1) if len(finals) > 1 else finals[0]

    def encode_one(self, steps) -> Tensor:
        return self.encode_batch([steps])[0, :]


def _gather_last(hs: list, lengths: np.ndarray) -> Tensor:
    """Pick h[T_b - 1] per batch row b from per-timestep hidden states."""
    # masked updates freeze h after a sequence ends, so the final timestep
    # tensor already carries each row's last real state
    return hs[-1]
