"""HTTP steering service (versioned under /v1).

One model per service instance. Reads run against the last committed
snapshot; edits and fine-tune jobs go through a single writer lock.
Fine-tuning works on a copy of the model and commits by atomic
write-then-rename plus an in-memory swap, so a killed job never corrupts
the committed checkpoint.
"""

from __future__ import annotations

import itertools
import json
import os
import tempfile
import threading

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import explainer as explainer_mod
from .data import Sequence, load_dataset
from .model import PrototypeModel
from .objective import Hyperparams
from .refinement import EditError, RefinementEdit, append_journal, apply_edit, finetune


class SequencePayload(BaseModel):
    tokens: list = None
    events: list = None
    values: list = None
    label: int = None


class EditRequest(BaseModel):
    op: str
    prototype_id: int = None
    sequence: SequencePayload = None


class PredictRequest(BaseModel):
    sequence: SequencePayload


class FinetuneRequest(BaseModel):
    epochs: int = 5
    seed: int = 0


class ServiceState:
    def __init__(self, ckpt_path, data_path):
        self.ckpt_path = ckpt_path
        self.journal_path = str(ckpt_path) + ".edits.jsonl"
        self.dataset = load_dataset(data_path)
        self.model = PrototypeModel.load(ckpt_path)
        hp_dict = getattr(self.model, "loaded_hyperparams", {}) or {}
        known = {f: hp_dict[f] for f in hp_dict if f in Hyperparams().to_dict()}
        self.hp = Hyperparams(**known) if known else Hyperparams()
        self.write_lock = threading.Lock()
        self.jobs: dict = {}
        self.job_running = False
        self._job_ids = itertools.count(1)

    def payload_to_sequence(self, payload: SequencePayload) -> Sequence:
        label = payload.label - 1 if payload.label else None
        if payload.tokens is not None:
            seq = self.model.sequence_from_tokens(payload.tokens)
            seq.label = label
            return seq
        if payload.events is not None:
            width = self.model.meta.get("step_width") or self.model.encoder.config.input_width
            steps = np.zeros((len(payload.events), width))
            for t, ev in enumerate(payload.events):
                for i in ev:
                    if not 0 <= i < width:
                        raise HTTPException(422, f"event index {i} out of range")
                    steps[t, i] = 1.0
            return Sequence(steps, label)
        if payload.values is not None:
            steps = np.asarray(payload.values, dtype=np.float64)
            if steps.ndim == 1:
                steps = steps[:, None]
            return Sequence(steps, label)
        raise HTTPException(422, "sequence payload needs tokens, events, or values")


def _prototype_entry(state: ServiceState, i: int, effective) -> dict:
    prov = state.model.provenance[i]
    return {
        "id": i,
        "provenance": prov.text() if prov is not None else None,
        "tokens": list(prov.tokens) if prov is not None and prov.tokens else None,
        "weights": [float(w) for w in state.model.W.value[:, i]],
        "class_names": [state.model.class_name(c) for c in range(state.model.num_classes)],
        "effective": bool(effective[i]),
    }


def create_app(ckpt_path, data_path) -> FastAPI:
    state = ServiceState(ckpt_path, data_path)
    app = FastAPI(title="protoseq steering service")
    app.state.service = state

    @app.get("/v1/prototypes")
    def list_prototypes():
        effective = explainer_mod.effective_mask(state.model)
        return {
            "k": state.model.k,
            "prototypes": [
                _prototype_entry(state, i, effective) for i in range(state.model.k)
            ],
        }

    @app.get("/v1/prototypes/{i}/neighbors")
    def prototype_neighbors(i: int, n: int = 5):
        if not 0 <= i < state.model.k:
            raise HTTPException(404, f"prototype {i} not found")
        found = explainer_mod.neighbors(state.model, i, state.dataset.split("train"), n=n)
        return {
            "prototype_id": i,
            "neighbors": [
                {
                    "text": seq.text(),
                    "similarity": sim,
                    "label": (
                        state.model.class_name(seq.label)
                        if isinstance(seq.label, int)
                        else None
                    ),
                }
                for seq, sim in found
            ],
        }

    @app.post("/v1/predict")
    def predict(req: PredictRequest):
        seq = state.payload_to_sequence(req.sequence)
        exp = explainer_mod.explain(state.model, seq, top_n=state.model.k)
        return {
            "scores": [float(v) for v in exp.scores],
            "predicted_class": exp.predicted_class,
            "predicted_label": state.model.class_name(exp.predicted_class),
            "explanation": {
                "text": explainer_mod.render_explanation(state.model, exp),
                "contributions": [
                    {
                        "prototype_id": c.prototype_id,
                        "similarity": c.similarity,
                        "weights": [float(w) for w in c.weights],
                        "provenance": c.provenance.text() if c.provenance else None,
                    }
                    for c in exp.contributions
                ],
            },
        }

    @app.post("/v1/edits")
    def post_edit(req: EditRequest):
        with state.write_lock:
            if state.job_running:
                raise HTTPException(409, "a fine-tune job is running; retry after it commits")
            seq = state.payload_to_sequence(req.sequence) if req.sequence else None
            try:
                edit = RefinementEdit(req.op, req.prototype_id, seq)
                apply_edit(state.model, edit)
            except EditError as e:
                status = 404 if "out of range" in str(e) else 422
                raise HTTPException(status, str(e)) from e
            append_journal(state.journal_path, edit)
            state.model.save(state.ckpt_path, hyperparams=state.hp.to_dict())
        return {"ok": True, "k": state.model.k}

    @app.post("/v1/finetune")
    def post_finetune(req: FinetuneRequest):
        with state.write_lock:
            if state.job_running:
                raise HTTPException(409, "a fine-tune job is already running")
            job_id = next(state._job_ids)
            job = {
                "id": job_id,
                "kind": "finetune",
                "status": "queued",
                "progress": {"epoch": 0, "total": req.epochs},
                "checkpoint": None,
                "error": None,
            }
            state.jobs[job_id] = job
            state.job_running = True

        def run():
            job["status"] = "running"
            try:
                # work on a copy; commit by atomic rename + swap
                fd, tmp = tempfile.mkstemp(suffix=".ckpt")
                os.close(fd)
                try:
                    state.model.save(tmp, hyperparams=state.hp.to_dict())
                    working = PrototypeModel.load(tmp)
                finally:
                    os.unlink(tmp)

                def on_epoch(epoch, record):
                    job["progress"] = {"epoch": epoch, "total": req.epochs}

                hp = state.hp
                working, _ = finetune(
                    working, state.dataset, hp, epochs=req.epochs, seed=req.seed,
                    on_epoch=on_epoch,
                )
                with state.write_lock:
                    working.save(state.ckpt_path, hyperparams=hp.to_dict())
                    state.model = working
                job["progress"] = {"epoch": req.epochs, "total": req.epochs}
                job["checkpoint"] = str(state.ckpt_path)
                job["status"] = "done"
            except Exception as e:  # job failures are reported, not raised
                job["error"] = str(e)
                job["status"] = "failed"
            finally:
                state.job_running = False

        threading.Thread(target=run, daemon=True).start()
        return job

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: int):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"job {job_id} not found")
        return job

    return app
