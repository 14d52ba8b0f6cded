"""Reference adapter: a small convolutional speaker embedder.

Speaks the harness's file protocol: invoked as ``refadapter --job WORKDIR``,
reads ``job.json`` there, and answers with ``result.json``.  Fit trains a
few conv blocks with global average pooling over time and a cosine-margin
classification head; embed writes one embedding row per input segment to
``embeddings.bin`` in the tensor file format.

Deliberately tiny: its job is proving the protocol boundary and directional
findings at toy scale, not competitive accuracy.  With a fixed seed repeat
runs agree to ~1e-4 relative (single-threaded CPU).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

DEFAULTS = {
    "epochs": 20,
    "batch_size": 32,
    "lr": 1e-3,
    "embed_dim": 64,
    "margin": 0.2,
    "scale": 16.0,
}


class ConvEmbedder(nn.Module):
    def __init__(self, n_mels: int, embed_dim: int):
        super().__init__()
        self.blocks = nn.Sequential(
            nn.Conv1d(n_mels, 64, 3, padding=1),
            nn.BatchNorm1d(64),
            nn.ReLU(),
            nn.MaxPool1d(2, ceil_mode=True),
            nn.Conv1d(64, 64, 3, padding=1),
            nn.BatchNorm1d(64),
            nn.ReLU(),
            nn.MaxPool1d(2, ceil_mode=True),
            nn.Conv1d(64, 128, 3, padding=1),
            nn.BatchNorm1d(128),
            nn.ReLU(),
        )
        self.proj = nn.Linear(128, embed_dim)

    def forward(self, x):  # (batch, n_mels, frames)
        h = self.blocks(x)
        pooled = h.mean(dim=2)  # average over time
        return self.proj(pooled)


class CosineMarginHead(nn.Module):
    """CosFace-style classifier: scaled cosine logits with subtracted margin."""

    def __init__(self, embed_dim: int, n_classes: int, margin: float, scale: float):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(n_classes, embed_dim) * 0.05)
        self.margin = margin
        self.scale = scale

    def forward(self, embeddings, targets):
        cos = F.linear(F.normalize(embeddings), F.normalize(self.weight))
        onehot = F.one_hot(targets, cos.shape[1]).to(cos.dtype)
        logits = self.scale * (cos - self.margin * onehot)
        return F.cross_entropy(logits, targets)


def load_labels(path):
    utterances, speakers = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["segment_index", "utterance_id", "speaker_id"]:
            raise ValueError(f"{path}: unexpected labels header {header}")
        for row in reader:
            utterances.append(row[1])
            speakers.append(row[2])
    return utterances, speakers


def seed_everything(seed: int):
    torch.manual_seed(seed)
    np.random.seed(seed % 2**32)
    torch.set_num_threads(1)


def run_fit(job: dict, workdir: Path) -> dict:
    from .tensorio import read_tensor

    params = dict(DEFAULTS)
    params.update(job.get("params", {}))
    seed_everything(int(job.get("seed", 0)))

    features = read_tensor(job["features_path"])
    if features.ndim != 3 or features.shape[0] == 0:
        raise ValueError(f"expected nonempty (n, mels, frames) features, got {features.shape}")
    _, speakers = load_labels(job["labels_path"])
    if len(speakers) != features.shape[0]:
        raise ValueError("labels and features disagree on segment count")
    classes = sorted(set(speakers))
    targets = torch.tensor([classes.index(s) for s in speakers])
    x = torch.from_numpy(features.astype(np.float32))

    model = ConvEmbedder(features.shape[1], int(params["embed_dim"]))
    head = CosineMarginHead(
        int(params["embed_dim"]), len(classes), float(params["margin"]), float(params["scale"])
    )
    optimizer = torch.optim.Adam(
        list(model.parameters()) + list(head.parameters()), lr=float(params["lr"])
    )
    generator = torch.Generator().manual_seed(int(job.get("seed", 0)))

    batch_size = max(2, int(params["batch_size"]))
    loss_history = []
    model.train()
    for epoch in range(int(params["epochs"])):
        order = torch.randperm(len(x), generator=generator)
        total, seen = 0.0, 0
        for lo in range(0, len(order), batch_size):
            idx = order[lo : lo + batch_size]
            if len(idx) < 2:  # BatchNorm needs more than one sample
                continue
            optimizer.zero_grad()
            loss = head(model(x[idx]), targets[idx])
            loss.backward()
            optimizer.step()
            total += float(loss) * len(idx)
            seen += len(idx)
        epoch_loss = total / max(seen, 1)
        loss_history.append(epoch_loss)
        print(f"epoch={epoch} loss={epoch_loss:.6f}", file=sys.stderr)

    model_path = workdir / "model.pt"
    torch.save(
        {
            "state_dict": model.state_dict(),
            "n_mels": features.shape[1],
            "embed_dim": int(params["embed_dim"]),
        },
        model_path,
    )
    return {"status": "ok", "model_path": str(model_path), "loss_history": loss_history}


def run_embed(job: dict) -> dict:
    from .tensorio import read_tensor, write_tensor

    seed_everything(0)
    checkpoint = torch.load(job["model_path"], map_location="cpu", weights_only=False)
    model = ConvEmbedder(checkpoint["n_mels"], checkpoint["embed_dim"])
    model.load_state_dict(checkpoint["state_dict"])
    model.eval()

    features = read_tensor(job["features_path"])
    if features.shape[0] == 0:
        write_tensor(job["output_path"], np.zeros((0, checkpoint["embed_dim"]), np.float32))
        return {"status": "ok"}
    if features.ndim != 3 or features.shape[1] != checkpoint["n_mels"]:
        raise ValueError(f"features {features.shape} do not match model ({checkpoint['n_mels']} mels)")
    x = torch.from_numpy(features.astype(np.float32))
    rows = []
    with torch.no_grad():
        for lo in range(0, len(x), 256):
            rows.append(model(x[lo : lo + 256]).numpy())
    write_tensor(job["output_path"], np.concatenate(rows).astype(np.float32))
    return {"status": "ok"}


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="refadapter", description=__doc__)
    parser.add_argument("--job", required=True, help="work directory containing job.json")
    args = parser.parse_args(argv)
    workdir = Path(args.job)
    try:
        job = json.loads((workdir / "job.json").read_text())
        command = job.get("command")
        if command == "fit":
            result = run_fit(job, workdir)
        elif command == "embed":
            result = run_embed(job)
        else:
            raise ValueError(f"unknown command {command!r}")
    except Exception as exc:  # protocol: nonzero exit + stderr diagnostic
        print(f"refadapter: {type(exc).__name__}: {exc}", file=sys.stderr)
        sys.exit(1)
    (workdir / "result.json").write_text(json.dumps(result) + "\n")


if __name__ == "__main__":
    main()
