import numpy as np
import pytest

from protoseq.data import Sequence
from protoseq.explainer import (
    ExplainError,
    effective_mask,
    explain,
    neighbors,
    prune,
    render_explanation,
)


def test_explanation_is_faithful_readout(tiny_model, tiny_batch):
    """Logits must equal sum_i a_i * W[:, i] exactly (up to float assembly)."""
    for seq in tiny_batch:
        exp = explain(tiny_model, seq, top_n=tiny_model.k)
        recombined = sum(
            c.similarity * c.weights for c in exp.contributions
        )
        np.testing.assert_allclose(recombined, exp.logits, atol=1e-10)


def test_contributions_sorted_by_similarity(tiny_model, tiny_batch):
    exp = explain(tiny_model, tiny_batch[0], top_n=tiny_model.k)
    sims = [c.similarity for c in exp.contributions]
    assert sims == sorted(sims, reverse=True)
    assert len(exp.contributions) == tiny_model.k


def test_top_n_and_min_similarity_filter(tiny_model, tiny_batch):
    exp = explain(tiny_model, tiny_batch[0], top_n=1)
    assert len(exp.contributions) == 1
    exp = explain(tiny_model, tiny_batch[0], top_n=2, min_similarity=1.1)
    assert exp.contributions == []  # similarity never exceeds 1


def test_render_block_layout(tiny_model, tiny_batch):
    tiny_model.meta["class_names"] = ["Negative", "Positive"]
    tiny_model.provenance = [
        Sequence(np.array([1, 2]), 0, ["good", "food"]),
        Sequence(np.array([3, 4]), 1, ["bad", "service"]),
    ]
    tiny_model.W.value = np.array([[2.1, 0.0], [0.02, 1.1]])
    seq = tiny_batch[0]
    exp = explain(tiny_model, seq, top_n=2)
    text = render_explanation(tiny_model, exp)
    lines = text.split("\n")
    assert lines[0] == f"Input: {seq.text()}"
    assert lines[1] == f"Prediction: {tiny_model.class_name(exp.predicted_class)}"
    assert lines[2].startswith("Explanation: ")
    assert lines[3].startswith(" " * 11 + "+ ")  # continuation aligned under head
    c0 = exp.contributions[0]
    prov0 = c0.provenance.text()
    # weights below the display floor (0.05) are omitted
    expected_suffixes = {0: " (Negative:2.1)", 1: " (Positive:1.1)"}
    assert lines[2] == f"Explanation: {c0.similarity:.2f} * {prov0}{expected_suffixes[c0.prototype_id]}"


def test_render_skips_all_small_weights(tiny_model, tiny_batch):
    tiny_model.provenance = [tiny_batch[0], tiny_batch[1]]
    tiny_model.W.value = np.full((2, 2), 0.01)
    exp = explain(tiny_model, tiny_batch[0], top_n=1)
    line = render_explanation(tiny_model, exp).split("\n")[2]
    assert "(" not in line  # no weight annotation at all


# -- pruning ---------------------------------------------------------------------


def make_pruned_model(tiny_model, W):
    tiny_model.W.value = np.asarray(W, dtype=np.float64)
    k = tiny_model.W.value.shape[1]
    tiny_model.P.value = np.arange(k * tiny_model.embedding_dim, dtype=np.float64).reshape(
        k, tiny_model.embedding_dim
    )
    tiny_model.provenance = [None] * k
    return tiny_model


def test_effective_mask_hand_rule(tiny_model):
    # max(W) = 2.0, tau=0.1 -> threshold 0.2; column maxes: 2.0, 0.19, 0.2
    model = make_pruned_model(tiny_model, [[2.0, 0.1, 0.2], [0.5, 0.19, 0.05]])
    np.testing.assert_array_equal(effective_mask(model, 0.1), [True, False, True])


def test_prune_drops_exactly_below_threshold(tiny_model):
    model = make_pruned_model(tiny_model, [[2.0, 0.1, 0.2], [0.5, 0.19, 0.05]])
    p_before = model.P.value.copy()
    prune(model, 0.1)
    assert model.k == 2
    np.testing.assert_array_equal(model.W.value, [[2.0, 0.2], [0.5, 0.05]])
    np.testing.assert_array_equal(model.P.value, p_before[[0, 2]])


def test_prune_boundary_is_inclusive(tiny_model):
    # column exactly at tau * max stays
    model = make_pruned_model(tiny_model, [[1.0, 0.1], [0.0, 0.0]])
    prune(model, 0.1)
    assert model.k == 2


def test_prune_all_zero_weights_keeps_everything(tiny_model):
    # the column holding the global max always passes the inclusive rule,
    # so an all-zero W prunes nothing (threshold is 0)
    model = make_pruned_model(tiny_model, [[0.0, 0.0], [0.0, 0.0]])
    prune(model, 0.1)
    assert model.k == 2


def test_prune_tau_validation(tiny_model):
    for tau in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ExplainError):
            prune(tiny_model, tau)


# -- neighbors ---------------------------------------------------------------------


def test_neighbors_match_linear_scan(tiny_model, tiny_batch, rng):
    pool = tiny_batch + [Sequence(np.array([2, 2, 1]), 0, ["b", "b", "a"])]
    tiny_model.P.value[0] = rng.normal(size=tiny_model.embedding_dim)
    result = neighbors(tiny_model, 0, pool, n=2)
    embeddings = tiny_model.embed_sequences(pool)
    d2 = np.sum((embeddings - tiny_model.P.value[0]) ** 2, axis=1)
    expected = np.argsort(-np.exp(-d2), kind="stable")[:2]
    ids = [next(i for i, x in enumerate(pool) if x is s) for s, _ in result]
    assert ids == list(expected)
    sims = [sim for _, sim in result]
    assert sims == sorted(sims, reverse=True)
    assert all(0 < sim <= 1 for sim in sims)


def test_neighbors_validation(tiny_model, tiny_batch):
    with pytest.raises(ExplainError):
        neighbors(tiny_model, 99, tiny_batch)
    with pytest.raises(ExplainError):
        neighbors(tiny_model, 0, tiny_batch, n=0)
