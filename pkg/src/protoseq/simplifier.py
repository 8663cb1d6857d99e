"""Prototype simplification: beam search over remove-one subsequences.

A prototype vector is projected not to a full training sequence but to a
subsequence of one, keeping only the steps whose removal would push the
embedding away from the prototype. The search scans source sequences,
descending each one's subsequence lattice with a width-w beam: expand
every beam member into all of its remove-one subsequences, keep the w
best-scoring candidates, repeat until no reducible candidates remain. The
best candidate ever scored (full sequences included) is returned, so the
result never scores worse than the plain full-sequence projection. Score
of a candidate s:

    score(s) = ||r(s) - p||_2 + gamma * len(s)

with gamma = 0 by default (pure embedding distance). `scan` caps how many
of the closest sources are descended (0 = all), trading optimality for
speed on large corpora.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Sequence
from .model import PrototypeModel


@dataclass(frozen=True)
class Subseq:
    """Order-preserving selection of steps from one source sequence."""

    source_id: int
    positions: tuple  # strictly increasing indices into the source

    def __len__(self):
        return len(self.positions)

    def steps(self, sources):
        return sources[self.source_id].steps[list(self.positions)]

    def content_key(self, sources):
        steps = self.steps(sources)
        if steps.ndim == 1:
            return (self.source_id, tuple(int(t) for t in steps))
        return (self.source_id, steps.tobytes())

    def to_sequence(self, sources) -> Sequence:
        src = sources[self.source_id]
        tokens = [src.tokens[j] for j in self.positions] if src.tokens is not None else None
        return Sequence(self.steps(sources), src.label, tokens, src.split)


def remove_one_subsequences(sub: Subseq, sources=None) -> set:
    """All subsequences obtained by deleting exactly one step; length-1
    inputs produce the empty set (never emit empty sequences)."""
    if len(sub) <= 1:
        return set()
    out = {}
    for drop in range(len(sub)):
        child = Subseq(sub.source_id, sub.positions[:drop] + sub.positions[drop + 1 :])
        key = child.content_key(sources) if sources is not None else child.positions
        out.setdefault(key, child)
    return set(out.values())


class _ScoreCache:
    """Embeds candidate subsequences once; scores are per-prototype."""

    def __init__(self, model: PrototypeModel, sources):
        self.model = model
        self.sources = sources
        self.embeddings = {}

    def embed(self, candidates) -> None:
        new = [c for c in candidates if c not in self.embeddings]
        if not new:
            return
        chunk = 256
        for start in range(0, len(new), chunk):
            part = new[start : start + chunk]
            E = self.model.encoder.encode_batch([c.steps(self.sources) for c in part]).value
            for c, e in zip(part, E):
                self.embeddings[c] = e

    def score(self, candidate: Subseq, p: np.ndarray, gamma: float) -> float:
        e = self.embeddings[candidate]
        return float(np.linalg.norm(e - p)) + gamma * len(candidate)


def _rank_key(cache, p, gamma):
    def key(c: Subseq):
        # ties: shorter first, then lower source id, then positions
        return (cache.score(c, p, gamma), len(c), c.source_id, c.positions)

    return key


def simplify_prototype(
    model: PrototypeModel,
    prototype: np.ndarray,
    sources,
    beam_width: int = 3,
    gamma: float = 0.0,
    cache: _ScoreCache = None,
    scan: int = 0,
) -> tuple:
    """Beam-search the best subsequence for one prototype vector.

    Returns (Subseq, projected embedding, score).
    """
    if not sources:
        raise ValueError("simplify_prototype needs a non-empty dataset")
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    cache = cache or _ScoreCache(model, sources)
    full = [Subseq(i, tuple(range(len(s)))) for i, s in enumerate(sources)]
    cache.embed(full)
    rank = _rank_key(cache, prototype, gamma)

    ranked_sources = sorted(full, key=rank)
    best = ranked_sources[0]
    to_scan = ranked_sources[: scan if scan > 0 else len(ranked_sources)]

    for seed in to_scan:
        beam = [seed]
        seen = {seed.content_key(sources)}
        while beam:
            children = {}
            for cand in beam:
                if rank(cand) < rank(best):
                    best = cand
                for child in remove_one_subsequences(cand, sources):
                    key = child.content_key(sources)
                    if key not in seen:
                        children.setdefault(key, child)
            if not children:
                break
            seen.update(children.keys())
            pool = list(children.values())
            cache.embed(pool)
            beam = sorted(pool, key=rank)[:beam_width]

    embedding = cache.embeddings[best]
    return best, embedding.copy(), cache.score(best, prototype, gamma)


def simplify_model(
    model: PrototypeModel, sequences, beam_width: int = 3, gamma: float = 0.0, scan: int = 0
) -> list:
    """Simplify every prototype in place; returns the chosen Subseqs."""
    cache = _ScoreCache(model, sequences)
    chosen = []
    for i in range(model.k):
        sub, embedding, _ = simplify_prototype(
            model, model.P.value[i], sequences, beam_width, gamma, cache, scan
        )
        model.P.value[i] = embedding
        model.provenance[i] = sub.to_sequence(sequences)
        chosen.append(sub)
    return chosen
