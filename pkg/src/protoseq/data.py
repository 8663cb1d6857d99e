"""Dataset ingestion, synthetic planted-motif generation, and metrics.

Datasets are UTF-8 line-delimited JSON records, one schema per file:

  text:   {"tokens": ["good", "food"], "label": 2, "split": "train"}
  events: {"events": [[1, 4], [2]], "labels": [3, 7], "split": "train"}
  series: {"values": [[0.1, 0.2], [0.3, 0.4]], "label": 1}

Labels are 1-based externally and 0-based internally. Vocabulary rows are
ordered by descending frequency then lexicographic; row 0 is reserved for
UNK tokens.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    pass


@dataclass
class Sequence:
    """One training/inference sequence.

    `steps` is an int array of token ids (text), or a float array of shape
    (T, n) (events/series). `tokens` keeps the raw strings for display.
    `label` is a 0-based class id (multiclass) or frozenset (multilabel).
    """

    steps: np.ndarray
    label: object = None
    tokens: list = None
    split: str = "train"

    def __len__(self):
        return len(self.steps)

    def text(self) -> str:
        if self.tokens is not None:
            return " ".join(self.tokens)
        if self.steps.ndim == 1:
            return " ".join(str(int(t)) for t in self.steps)
        return " ".join(
            "{" + ",".join(str(i) for i in np.flatnonzero(row)) + "}" for row in self.steps
        )


@dataclass
class Dataset:
    sequences: list
    schema: str  # "text" | "events" | "series"
    mode: str  # "multiclass" | "multilabel"
    num_classes: int
    vocab: list = None  # token strings, row 0 = UNK (text schema only)
    step_width: int = 0  # event/series vector width
    class_names: list = None

    def split(self, tag: str) -> list:
        return [s for s in self.sequences if s.split == tag]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab) if self.vocab else 0

    def class_name(self, c: int) -> str:
        if self.class_names and c < len(self.class_names):
            return self.class_names[c]
        return f"Class {c + 1}"

    def encode_tokens(self, tokens: list) -> np.ndarray:
        index = {t: i for i, t in enumerate(self.vocab)}
        return np.array([index.get(t, 0) for t in tokens], dtype=np.intp)

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            header = {
                "schema": self.schema,
                "mode": self.mode,
                "num_classes": self.num_classes,
            }
            if self.step_width:
                header["step_width"] = self.step_width
            if self.class_names:
                header["class_names"] = self.class_names
            f.write(json.dumps({"_header": header}) + "\n")
            for s in self.sequences:
                f.write(json.dumps(_record_of(s, self.schema)) + "\n")


def _record_of(s: Sequence, schema: str) -> dict:
    rec: dict = {"split": s.split}
    if schema == "text":
        rec["tokens"] = list(s.tokens)
    elif schema == "events":
        rec["events"] = [[int(i) for i in np.flatnonzero(row)] for row in s.steps]
    else:
        rec["values"] = [[float(v) for v in row] for row in s.steps]
    if isinstance(s.label, frozenset):
        rec["labels"] = sorted(c + 1 for c in s.label)
    elif s.label is not None:
        rec["label"] = int(s.label) + 1
    return rec


def load_dataset(path, schema: str = None) -> Dataset:
    """Load a line-delimited dataset; schema read from the header line or
    inferred from the first record when absent."""
    records = []
    header = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON: {e}") from e
            if "_header" in rec:
                header = rec["_header"]
                continue
            records.append((lineno, rec))
    if not records:
        raise DataError(f"{path}: no records")
    if schema is None:
        schema = (header or {}).get("schema") or _infer_schema(records[0][1])
    if schema not in ("text", "events", "series"):
        raise DataError(f"unknown schema {schema!r}")

    mode = (header or {}).get("mode")
    declared_c = (header or {}).get("num_classes")
    class_names = (header or {}).get("class_names")
    step_width = (header or {}).get("step_width", 0)

    if mode is None:
        mode = "multilabel" if "labels" in records[0][1] else "multiclass"

    max_label = 0
    raw = []
    for lineno, rec in records:
        label = None
        if "labels" in rec:
            labels = rec["labels"]
            if any(not isinstance(c, int) or c < 1 for c in labels):
                raise DataError(f"{path}:{lineno}: labels must be 1-based positive integers")
            label = frozenset(c - 1 for c in labels)
            max_label = max([max_label] + list(labels))
        elif "label" in rec:
            c = rec["label"]
            if not isinstance(c, int) or c < 1:
                raise DataError(f"{path}:{lineno}: label must be a 1-based positive integer")
            label = c - 1
            max_label = max(max_label, c)
        raw.append((lineno, rec, label))

    num_classes = declared_c or max_label
    if max_label > num_classes:
        raise DataError(f"{path}: label {max_label} out of declared range 1..{num_classes}")

    vocab = None
    sequences = []
    if schema == "text":
        counts = Counter()
        for _, rec, _ in raw:
            counts.update(rec.get("tokens", ()))
        # frequency-descending then lexicographic; deterministic across runs
        vocab = ["<unk>"] + [t for t, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]
        index = {t: i for i, t in enumerate(vocab)}
        for lineno, rec, label in raw:
            tokens = rec.get("tokens")
            if not tokens:
                raise DataError(f"{path}:{lineno}: empty or missing 'tokens'")
            steps = np.array([index[t] for t in tokens], dtype=np.intp)
            sequences.append(Sequence(steps, label, list(tokens), rec.get("split", "train")))
    elif schema == "events":
        if not step_width:
            step_width = 1 + max(
                (max(ev) for _, rec, _ in raw for ev in rec.get("events", []) if ev), default=0
            )
        for lineno, rec, label in raw:
            events = rec.get("events")
            if not events:
                raise DataError(f"{path}:{lineno}: empty or missing 'events'")
            steps = np.zeros((len(events), step_width))
            for t, ev in enumerate(events):
                for i in ev:
                    if not 0 <= i < step_width:
                        raise DataError(f"{path}:{lineno}: event index {i} out of range")
                    steps[t, i] = 1.0
            sequences.append(Sequence(steps, label, None, rec.get("split", "train")))
    else:
        for lineno, rec, label in raw:
            values = rec.get("values")
            if not values:
                raise DataError(f"{path}:{lineno}: empty or missing 'values'")
            steps = np.asarray(values, dtype=np.float64)
            if steps.ndim == 1:
                steps = steps[:, None]
            if step_width and steps.shape[1] != step_width:
                raise DataError(f"{path}:{lineno}: step width {steps.shape[1]} != {step_width}")
            step_width = step_width or steps.shape[1]
            sequences.append(Sequence(steps, label, None, rec.get("split", "train")))

    return Dataset(sequences, schema, mode, num_classes, vocab, step_width, class_names)


def _infer_schema(rec: dict) -> str:
    for key, schema in (("tokens", "text"), ("events", "events"), ("values", "series")):
        if key in rec:
            return schema
    raise DataError(f"cannot infer schema from record keys {sorted(rec)}")


# -- synthetic planted-motif data ------------------------------------------


@dataclass
class MotifSpec:
    num_classes: int = 4
    vocab_size: int = 50
    motif_length: int = 3
    min_length: int = 8
    max_length: int = 12
    insert_prob: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise DataError("need at least 2 classes")
        if self.num_classes * self.motif_length >= self.vocab_size:
            raise DataError("vocabulary too small for class-distinct motifs")

    def motifs(self) -> list:
        """Class-distinct motif token lists; tokens tNN, noise alphabet disjoint."""
        return [
            [f"t{c * self.motif_length + j:02d}" for j in range(self.motif_length)]
            for c in range(self.num_classes)
        ]

    def noise_tokens(self) -> list:
        reserved = self.num_classes * self.motif_length
        return [f"t{i:02d}" for i in range(reserved, self.vocab_size)]


def generate_synthetic(spec: MotifSpec, n_train: int, n_test: int = 0, n_val: int = 0) -> Dataset:
    """Planted-motif sequences: class c's motif inserted contiguously at a
    random position with probability `insert_prob`, amid noise tokens.

    The generator records how many motifs it planted per class in the
    returned dataset's `planted_counts` attribute (self-audit hook).
    """
    rng = np.random.default_rng(spec.seed)
    motifs = spec.motifs()
    noise = spec.noise_tokens()
    planted = Counter()
    sequences = []
    plan = [("train", n_train), ("val", n_val), ("test", n_test)]
    for split, count in plan:
        for _ in range(count):
            c = int(rng.integers(spec.num_classes))
            L = int(rng.integers(spec.min_length, spec.max_length + 1))
            tokens = [noise[i] for i in rng.integers(len(noise), size=L)]
            if rng.random() < spec.insert_prob:
                pos = int(rng.integers(0, L - spec.motif_length + 1))
                tokens[pos : pos + spec.motif_length] = motifs[c]
                planted[c] += 1
            sequences.append(Sequence(None, c, tokens, split))

    counts = Counter()
    for s in sequences:
        counts.update(s.tokens)
    vocab = ["<unk>"] + [t for t, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]
    index = {t: i for i, t in enumerate(vocab)}
    for s in sequences:
        s.steps = np.array([index[t] for t in s.tokens], dtype=np.intp)

    ds = Dataset(sequences, "text", "multiclass", spec.num_classes, vocab)
    ds.planted_counts = dict(planted)
    return ds


# -- metrics ----------------------------------------------------------------


def accuracy(pred_scores: np.ndarray, truth: list) -> float:
    pred = np.argmax(pred_scores, axis=1)
    return float(np.mean([p == t for p, t in zip(pred, truth)]))


def recall_at_k(pred_scores: np.ndarray, truth: list, k: int = 5) -> dict:
    """Recall@k and MAP@k for multilabel truth sets; examples with empty
    truth are skipped and counted in `skipped`."""
    recalls, aps, skipped = [], [], 0
    for scores, labels in zip(pred_scores, truth):
        labels = set(labels)
        if not labels:
            skipped += 1
            continue
        top = list(np.argsort(-scores, kind="stable")[:k])
        hits = labels.intersection(top)
        recalls.append(len(hits) / len(labels))
        precisions = []
        found = 0
        for rank, c in enumerate(top, start=1):
            if c in labels:
                found += 1
                precisions.append(found / rank)
        denom = min(len(labels), k)
        aps.append(sum(precisions) / denom if denom else 0.0)
    return {
        "recall_at_5": float(np.mean(recalls)) if recalls else 0.0,
        "map_at_5": float(np.mean(aps)) if aps else 0.0,
        "skipped": skipped,
    }


def evaluate_metrics(pred_scores: np.ndarray, truth: list, mode: str) -> dict:
    if mode == "multiclass":
        return {"accuracy": accuracy(pred_scores, truth)}
    return recall_at_k(pred_scores, truth, k=5)
