import json

import numpy as np
import pytest

from protoseq.data import Sequence, accuracy
from protoseq.refinement import EditError, RefinementEdit, append_journal, apply_edit, finetune
from protoseq.trainer import build_model, train

from conftest import small_hp


def seq_of(tokens, dataset, label=0):
    return Sequence(dataset.encode_tokens(tokens), label, list(tokens))


@pytest.fixture
def trained(small_synthetic):
    hp = small_hp(epochs=6, k=6)
    model, _ = train(small_synthetic, hp, seed=1)
    return model, hp


# -- edit construction -----------------------------------------------------------


def test_edit_kind_validation():
    with pytest.raises(EditError):
        RefinementEdit("merge")
    with pytest.raises(EditError):
        RefinementEdit("delete")  # needs prototype_id
    with pytest.raises(EditError):
        RefinementEdit("create")  # needs sequence


# -- apply_edit --------------------------------------------------------------------


def test_delete_removes_row_and_column(trained):
    model, _ = trained
    k = model.k
    survivors = [p for i, p in enumerate(model.provenance) if i != 2]
    p_keep = np.delete(model.P.value, 2, axis=0)
    w_keep = np.delete(model.W.value, 2, axis=1)
    apply_edit(model, RefinementEdit("delete", prototype_id=2))
    assert model.k == k - 1
    np.testing.assert_array_equal(model.P.value, p_keep)
    np.testing.assert_array_equal(model.W.value, w_keep)
    assert all(a is b for a, b in zip(model.provenance, survivors))
    assert len(model.provenance) == k - 1


def test_delete_last_prototype_refused(trained):
    model, _ = trained
    while model.k > 1:
        apply_edit(model, RefinementEdit("delete", prototype_id=0))
    with pytest.raises(EditError, match="last"):
        apply_edit(model, RefinementEdit("delete", prototype_id=0))
    assert model.k == 1  # untouched


def test_create_appends_zero_weight_column(trained, small_synthetic):
    model, _ = trained
    k = model.k
    new_seq = seq_of(["t00", "t01", "t02"], small_synthetic, label=0)
    apply_edit(model, RefinementEdit("create", sequence=new_seq))
    assert model.k == k + 1
    np.testing.assert_array_equal(model.W.value[:, -1], 0.0)
    e = model.encoder.encode_batch([new_seq.steps]).value[0]
    np.testing.assert_allclose(model.P.value[-1], e, atol=1e-12)
    assert model.provenance[-1] is new_seq


def test_revise_replaces_embedding_keeps_weights(trained, small_synthetic):
    model, _ = trained
    w_col = model.W.value[:, 1].copy()
    new_seq = seq_of(["t03", "t04", "t05"], small_synthetic, label=1)
    apply_edit(model, RefinementEdit("revise", prototype_id=1, sequence=new_seq))
    np.testing.assert_array_equal(model.W.value[:, 1], w_col)
    e = model.encoder.encode_batch([new_seq.steps]).value[0]
    np.testing.assert_allclose(model.P.value[1], e, atol=1e-12)
    assert model.provenance[1] is new_seq


def test_out_of_range_edit_leaves_model_untouched(trained, small_synthetic):
    model, _ = trained
    p, w = model.P.value.copy(), model.W.value.copy()
    new_seq = seq_of(["t00"], small_synthetic)
    with pytest.raises(EditError, match="out of range"):
        apply_edit(model, RefinementEdit("revise", prototype_id=99, sequence=new_seq))
    np.testing.assert_array_equal(model.P.value, p)
    np.testing.assert_array_equal(model.W.value, w)


# -- pinned fine-tuning ---------------------------------------------------------


def test_finetune_zero_epochs_refreshes_pinned(trained, small_synthetic):
    model, hp = trained
    model.P.value += 0.5  # knock prototypes off their provenance embeddings
    finetune(model, small_synthetic, hp, epochs=0)
    pinned = model.pinned_prototypes().value
    assert np.max(np.linalg.norm(model.P.value - pinned, axis=1)) <= 1e-12


def test_finetune_pins_prototypes_and_skips_projection(trained, small_synthetic):
    model, hp = trained
    new_seq = Sequence(
        small_synthetic.encode_tokens(["t00", "t01", "t02"]), 0, ["t00", "t01", "t02"]
    )
    apply_edit(model, RefinementEdit("create", sequence=new_seq))
    model, state = finetune(model, small_synthetic, hp, epochs=3, seed=4)
    assert state.projection_log == []  # projection skipped while pinned
    pinned = model.pinned_prototypes().value
    assert np.max(np.linalg.norm(model.P.value - pinned, axis=1)) <= 1e-6
    assert np.all(model.W.value >= 0)
    assert state.epochs == 3


def test_finetune_requires_full_provenance(trained, small_synthetic):
    model, hp = trained
    model.provenance[0] = None
    with pytest.raises(EditError, match="provenance"):
        finetune(model, small_synthetic, hp, epochs=1)


def test_finetune_preserves_accuracy(trained, small_synthetic):
    model, hp = trained
    test = small_synthetic.split("test")
    before = accuracy(model.predict(test), [s.label for s in test])
    apply_edit(model, RefinementEdit("delete", prototype_id=0))
    model, _ = finetune(model, small_synthetic, hp, epochs=3, seed=2)
    after = accuracy(model.predict(test), [s.label for s in test])
    assert after >= before - 0.05


# -- journal ------------------------------------------------------------------------


def test_journal_appends_jsonl(tmp_path, small_synthetic):
    path = tmp_path / "edits.jsonl"
    seq = seq_of(["t00", "t01"], small_synthetic, label=0)
    append_journal(path, RefinementEdit("create", sequence=seq))
    append_journal(path, RefinementEdit("delete", prototype_id=3))
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == 2
    assert records[0]["op"] == "create"
    assert records[0]["sequence"]["tokens"] == ["t00", "t01"]
    assert records[1] == {"op": "delete", "prototype_id": 3, "time": records[1]["time"]}
