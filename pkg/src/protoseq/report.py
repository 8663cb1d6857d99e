"""Render training reports: a CSV of per-epoch metrics plus matplotlib
figures (loss curves, LR schedule, validation metric, and optionally a
prototype similarity heatmap for a checkpoint)."""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def load_metrics_log(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    if not records:
        raise ValueError(f"{path}: empty metrics log")
    return records


def write_metrics_csv(records: list, path) -> None:
    keys = []
    for r in records:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=keys)
        writer.writeheader()
        writer.writerows(records)


def render_report(log_path, out_dir, model=None, sequences=None) -> list:
    """Write metrics.csv and figures into `out_dir`; returns written paths."""
    records = load_metrics_log(log_path)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    csv_path = os.path.join(out_dir, "metrics.csv")
    write_metrics_csv(records, csv_path)
    written.append(csv_path)

    epochs = [r["epoch"] for r in records]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for term in ("ce", "r_c", "r_e", "r_d", "l1", "total"):
        if term in records[0]:
            ax.plot(epochs, [r[term] for r in records], label=term)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss (sum over epoch)")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "loss_curves.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(epochs, [r["lr"] for r in records], marker=".")
    ax.set_xlabel("epoch")
    ax.set_ylabel("learning rate")
    fig.tight_layout()
    path = os.path.join(out_dir, "lr_schedule.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    val_keys = [k for k in records[0] if k.startswith("val_") and k != "val_skipped"]
    if val_keys:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for k in val_keys:
            ax.plot(epochs, [r.get(k) for r in records], marker=".", label=k)
        ax.set_xlabel("epoch")
        ax.set_ylabel("validation metric")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, "validation.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if model is not None and sequences:
        sims = np.exp(
            -np.sum(
                (model.embed_sequences(sequences)[:, None, :] - model.P.value[None, :, :]) ** 2,
                axis=2,
            )
        )
        fig, ax = plt.subplots(figsize=(6, 4.5))
        im = ax.imshow(sims.T, aspect="auto", cmap="viridis", vmin=0.0, vmax=1.0)
        ax.set_xlabel("sequence")
        ax.set_ylabel("prototype")
        fig.colorbar(im, ax=ax, label="similarity")
        fig.tight_layout()
        path = os.path.join(out_dir, "similarity_heatmap.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
