"""Command-line frontend: train, eval, explain, simplify, prune,
prototypes, serve, synth, report."""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import explainer as explainer_mod
from .data import DataError, MotifSpec, evaluate_metrics, generate_synthetic, load_dataset
from .model import PrototypeModel
from .objective import ConfigError, Hyperparams
from .report import render_report
from .simplifier import simplify_model
from .trainer import TrainingError, train


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Prototype-based interpretable sequence classification toolkit."""


@main.command("train")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--log", "log_path", type=click.Path(), help="Per-epoch metrics log (JSONL).")
def train_cmd(data_path, config_path, out_path, seed, log_path):
    """Train a model and write a checkpoint plus a metrics log."""
    try:
        hp = Hyperparams.load(config_path) if config_path else Hyperparams()
        dataset = load_dataset(data_path)
        log_path = log_path or out_path + ".metrics.jsonl"
        simplify_fn = None
        if hp.simplify:
            simplify_fn = lambda m, seqs: simplify_model(m, seqs, hp.beam_width, hp.gamma, hp.scan)
        model, state = train(dataset, hp, seed=seed, log_path=log_path, simplify_fn=simplify_fn)
        model.save(out_path, hyperparams=hp.to_dict())
    except (ConfigError, DataError, TrainingError) as e:
        _fail(str(e))
    click.echo(f"wrote {out_path} ({state.epochs} epochs, metrics in {log_path})")


@main.command("eval")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split", default=None, help="Split tag to evaluate (default: test, else all).")
def eval_cmd(ckpt_path, data_path, split):
    """Evaluate a checkpoint: accuracy (multiclass) or Recall@5/MAP@5."""
    try:
        model = PrototypeModel.load(ckpt_path)
        dataset = load_dataset(data_path)
        if split is None:
            split = "test" if dataset.split("test") else None
        seqs = dataset.split(split) if split else dataset.sequences
        if not seqs:
            raise DataError(f"no sequences in split {split!r}")
        scores = model.predict(seqs)
        metrics = evaluate_metrics(scores, [s.label for s in seqs], model.mode)
    except (DataError, ValueError) as e:
        _fail(str(e))
    for name, value in metrics.items():
        click.echo(f"{name} = {value:.4f}" if isinstance(value, float) else f"{name} = {value}")


@main.command("explain")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_arg", required=True, help="Text (whitespace tokens) or a JSONL file.")
@click.option("--top", default=3, show_default=True, type=int)
@click.option("--min-similarity", default=0.0, show_default=True, type=float)
def explain_cmd(ckpt_path, input_arg, top, min_similarity):
    """Explain a prediction as a weighted sum of prototype similarities."""
    try:
        model = PrototypeModel.load(ckpt_path)
        sequences = _input_sequences(model, input_arg)
        blocks = []
        for seq in sequences:
            exp = explainer_mod.explain(model, seq, top_n=top, min_similarity=min_similarity)
            blocks.append(explainer_mod.render_explanation(model, exp))
    except (DataError, ValueError) as e:
        _fail(str(e))
    click.echo("\n\n".join(blocks))


def _input_sequences(model, input_arg):
    if os.path.exists(input_arg):
        dataset = load_dataset(input_arg)
        return dataset.sequences
    tokens = input_arg.split()
    if not tokens:
        raise DataError("empty input")
    return [model.sequence_from_tokens(tokens)]


@main.command("simplify")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--beam", default=3, show_default=True, type=int)
@click.option("--gamma", default=0.0, show_default=True, type=float)
@click.option("--scan", default=30, show_default=True, type=int,
              help="Closest sources descended per prototype (0 = all).")
@click.option("--out", "out_path", required=True, type=click.Path())
def simplify_cmd(ckpt_path, data_path, beam, gamma, scan, out_path):
    """Project every prototype to a critical subsequence via beam search."""
    try:
        model = PrototypeModel.load(ckpt_path)
        dataset = load_dataset(data_path)
        chosen = simplify_model(model, dataset.split("train"), beam_width=beam, gamma=gamma, scan=scan)
        model.save(out_path, hyperparams=getattr(model, "loaded_hyperparams", {}))
    except (DataError, ValueError) as e:
        _fail(str(e))
    mean_len = float(np.mean([len(c) for c in chosen]))
    click.echo(f"wrote {out_path} (mean prototype length {mean_len:.2f})")


@main.command("prune")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--tau", default=0.1, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
def prune_cmd(ckpt_path, tau, out_path):
    """Drop prototypes whose max weight is below tau * max(W)."""
    try:
        model = PrototypeModel.load(ckpt_path)
        before = model.k
        explainer_mod.prune(model, tau)
        model.save(out_path, hyperparams=getattr(model, "loaded_hyperparams", {}))
    except ValueError as e:
        _fail(str(e))
    click.echo(f"wrote {out_path} ({before} -> {model.k} prototypes)")


@main.command("prototypes")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--tau", default=0.1, show_default=True, type=float)
def prototypes_cmd(ckpt_path, tau):
    """List prototypes with provenance, weights, and effective flag."""
    try:
        model = PrototypeModel.load(ckpt_path)
        effective = explainer_mod.effective_mask(model, tau)
    except ValueError as e:
        _fail(str(e))
    for i in range(model.k):
        prov = model.provenance[i]
        text = prov.text() if prov is not None else "<no provenance>"
        weights = ", ".join(
            f"{model.class_name(c)}:{w:.2f}" for c, w in enumerate(model.W.value[:, i])
        )
        flag = "effective" if effective[i] else "pruned-by-rule"
        click.echo(f"[{i}] ({flag}) {text} | {weights}")


@main.command("synth")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--classes", default=4, show_default=True, type=int)
@click.option("--vocab", default=50, show_default=True, type=int)
@click.option("--motif-len", default=3, show_default=True, type=int)
@click.option("--min-len", default=8, show_default=True, type=int)
@click.option("--max-len", default=12, show_default=True, type=int)
@click.option("--insert-prob", default=1.0, show_default=True, type=float)
@click.option("--train", "n_train", default=2000, show_default=True, type=int)
@click.option("--val", "n_val", default=0, show_default=True, type=int)
@click.option("--test", "n_test", default=500, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def synth_cmd(out_path, classes, vocab, motif_len, min_len, max_len, insert_prob, n_train, n_val, n_test, seed):
    """Generate a planted-motif synthetic dataset."""
    try:
        spec = MotifSpec(classes, vocab, motif_len, min_len, max_len, insert_prob, seed)
        dataset = generate_synthetic(spec, n_train, n_test=n_test, n_val=n_val)
        dataset.to_jsonl(out_path)
    except DataError as e:
        _fail(str(e))
    click.echo(f"wrote {out_path} ({len(dataset.sequences)} sequences, motifs: {spec.motifs()})")


@main.command("report")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--ckpt", "ckpt_path", type=click.Path(exists=True))
@click.option("--data", "data_path", type=click.Path(exists=True))
def report_cmd(log_path, out_dir, ckpt_path, data_path):
    """Render metrics.csv and figures from a training metrics log."""
    model = sequences = None
    try:
        if ckpt_path and data_path:
            model = PrototypeModel.load(ckpt_path)
            sequences = load_dataset(data_path).split("test") or None
        written = render_report(log_path, out_dir, model=model, sequences=sequences)
    except (DataError, ValueError) as e:
        _fail(str(e))
    for path in written:
        click.echo(f"wrote {path}")


@main.command("serve")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--bind", default=None, help="host:port (default env PROTOSEQ_BIND or 127.0.0.1:8000)")
def serve_cmd(ckpt_path, data_path, bind):
    """Run the HTTP steering service."""
    import uvicorn

    from .service import create_app

    bind = bind or os.environ.get("PROTOSEQ_BIND", "127.0.0.1:8000")
    host, _, port = bind.rpartition(":")
    try:
        app = create_app(ckpt_path, data_path)
    except (DataError, ValueError) as e:
        _fail(str(e))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
