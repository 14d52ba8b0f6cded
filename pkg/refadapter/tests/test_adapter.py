"""Protocol conformance tests, exercised through the real subprocess entry."""

import csv
import json
import subprocess
import sys

import numpy as np

from refadapter.tensorio import read_tensor, write_tensor


def synth_segments(n_speakers=5, per_speaker=20, n_mels=12, frames=40, seed=0):
    """Speaker = mel prototype + noise: trivially separable from frames."""
    rng = np.random.default_rng(seed)
    protos = 2.0 * rng.standard_normal((n_speakers, n_mels))
    feats, speakers = [], []
    for s in range(n_speakers):
        for _ in range(per_speaker):
            feats.append(protos[s][:, None] + 0.3 * rng.standard_normal((n_mels, frames)))
            speakers.append(f"SPK{s}")
    return np.stack(feats).astype(np.float32), speakers


def write_job(workdir, payload):
    workdir.mkdir(parents=True, exist_ok=True)
    (workdir / "job.json").write_text(json.dumps(payload))


def write_labels(path, speakers):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_index", "utterance_id", "speaker_id"])
        for i, s in enumerate(speakers):
            writer.writerow([i, f"{s}_U{i}", s])


def invoke(workdir):
    return subprocess.run(
        [sys.executable, "-m", "refadapter.adapter", "--job", str(workdir)],
        capture_output=True,
        text=True,
        timeout=300,
    )


def run_fit(tmp_path, seed=7, params=None):
    tmp_path.mkdir(parents=True, exist_ok=True)
    feats, speakers = synth_segments()
    features_path = tmp_path / "segments.sstf"
    labels_path = tmp_path / "labels.csv"
    write_tensor(features_path, feats)
    write_labels(labels_path, speakers)
    workdir = tmp_path / "fit"
    write_job(
        workdir,
        {
            "command": "fit",
            "features_path": str(features_path),
            "labels_path": str(labels_path),
            "seed": seed,
            "params": params or {"epochs": 6, "batch_size": 25, "embed_dim": 16},
            "timeout_s": 300,
        },
    )
    proc = invoke(workdir)
    assert proc.returncode == 0, proc.stderr
    result = json.loads((workdir / "result.json").read_text())
    assert result["status"] == "ok"
    return result, feats


def run_embed(tmp_path, model_path, feats, tag="embed"):
    workdir = tmp_path / tag
    features_path = tmp_path / f"{tag}_segments.sstf"
    write_tensor(features_path, feats)
    write_job(
        workdir,
        {
            "command": "embed",
            "model_path": model_path,
            "features_path": str(features_path),
            "output_path": str(workdir / "embeddings.bin"),
        },
    )
    proc = invoke(workdir)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((workdir / "result.json").read_text())["status"] == "ok"
    return workdir / "embeddings.bin"


def test_fit_loss_decreases_by_half(tmp_path):
    result, _ = run_fit(tmp_path, params={"epochs": 10, "batch_size": 25, "embed_dim": 16})
    losses = result["loss_history"]
    assert len(losses) == 10
    assert losses[-1] <= 0.5 * losses[0], losses


def test_embed_shapes_and_finiteness(tmp_path):
    result, feats = run_fit(tmp_path)
    out = run_embed(tmp_path, result["model_path"], feats[:10])
    emb = read_tensor(out)
    assert emb.shape == (10, 16)
    assert np.isfinite(emb).all()


def test_embeddings_separate_speakers(tmp_path):
    result, feats = run_fit(tmp_path, params={"epochs": 12, "batch_size": 25, "embed_dim": 16})
    out = run_embed(tmp_path, result["model_path"], feats)
    emb = read_tensor(out).astype(np.float64)
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    labels = np.repeat(np.arange(5), 20)
    sims = emb @ emb.T
    same = sims[labels[:, None] == labels[None, :]].mean()
    diff = sims[labels[:, None] != labels[None, :]].mean()
    assert same > diff + 0.1, (same, diff)


def test_embed_rerun_byte_identical(tmp_path):
    result, feats = run_fit(tmp_path)
    out_a = run_embed(tmp_path, result["model_path"], feats[:12], tag="e1")
    out_b = run_embed(tmp_path, result["model_path"], feats[:12], tag="e2")
    assert out_a.read_bytes() == out_b.read_bytes()


def test_same_seed_reproducible(tmp_path):
    result_a, feats = run_fit(tmp_path / "a", seed=11)
    result_b, _ = run_fit(tmp_path / "b", seed=11)
    emb_a = read_tensor(run_embed(tmp_path / "a", result_a["model_path"], feats[:8]))
    emb_b = read_tensor(run_embed(tmp_path / "b", result_b["model_path"], feats[:8]))
    scale = np.abs(emb_a).max()
    assert np.max(np.abs(emb_a - emb_b)) <= 1e-4 * scale


def test_empty_embed_request(tmp_path):
    result, feats = run_fit(tmp_path)
    out = run_embed(tmp_path, result["model_path"], feats[:0], tag="empty")
    emb = read_tensor(out)
    assert emb.shape == (0, 16)


def test_corrupted_features_nonzero_exit(tmp_path):
    features_path = tmp_path / "segments.sstf"
    features_path.write_bytes(b"garbage bytes, not a tensor")
    labels_path = tmp_path / "labels.csv"
    write_labels(labels_path, ["SPK0", "SPK1"])
    workdir = tmp_path / "fit"
    write_job(
        workdir,
        {
            "command": "fit",
            "features_path": str(features_path),
            "labels_path": str(labels_path),
            "seed": 0,
            "params": {},
        },
    )
    proc = invoke(workdir)
    assert proc.returncode != 0
    assert "refadapter:" in proc.stderr


def test_unknown_command_rejected(tmp_path):
    workdir = tmp_path / "job"
    write_job(workdir, {"command": "transmogrify"})
    proc = invoke(workdir)
    assert proc.returncode != 0
    assert "unknown command" in proc.stderr
