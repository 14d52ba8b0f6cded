"""Embedding-model boundary: native average baseline and external adapters.

The native baseline collapses a segment to the per-row mean of its columns,
i.e. the mean of a unit-variance Gaussian per speaker when fitted, so
scoring with the negative squared euclidean distance is its log-likelihood
up to affine constants.

External models attach as subprocesses exchanging files in a work
directory: the harness writes ``job.json`` (plus feature tensors and CSV
indexes), invokes ``<adapter_command> --job <workdir>``, and reads
``result.json`` / ``embeddings.bin`` back.  See README for the byte-level
schemas.
"""

from __future__ import annotations

import csv
import json
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import TrialList
from .errors import (
    AdapterFailure,
    AdapterTimeout,
    ConfigError,
    InvalidEmbeddingError,
    ProtocolError,
    UndefinedScoreError,
)
from .scramble import Segment
from .tensorfile import read_tensor, write_tensor

MODEL_KINDS = ("avg-baseline", "external-adapter")
FEATURE_SPACES = ("mel", "linear-stft")
SCORERS = ("cosine", "neg-sq-euclidean")


@dataclass
class Embedding:
    vector: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(self.vector)):
            raise InvalidEmbeddingError("embedding contains non-finite values")
        if self.normalized:
            norm = np.linalg.norm(self.vector)
            if abs(norm - 1.0) > 1e-6:
                raise InvalidEmbeddingError(f"normalized flag set but |v| = {norm}")


@dataclass
class EmbeddingModelRef:
    kind: str = "avg-baseline"
    adapter_command: str = ""
    feature_space: str = "mel"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.feature_space not in FEATURE_SPACES:
            raise ConfigError(f"unknown feature space {self.feature_space!r}")
        if self.kind == "external-adapter" and not self.adapter_command:
            raise ConfigError("external-adapter requires adapter_command")

    @property
    def name(self) -> str:
        if self.kind == "avg-baseline":
            return "avg-baseline"
        return Path(shlex.split(self.adapter_command)[0]).name


@dataclass
class ScoreSet:
    scores: np.ndarray
    scorer: str

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scorer not in SCORERS:
            raise ConfigError(f"unknown scorer {self.scorer!r}")
        if not np.all(np.isfinite(self.scores)):
            raise InvalidEmbeddingError("score set contains non-finite values")

    def __len__(self):
        return len(self.scores)


def avg_embed(segment: Segment) -> Embedding:
    """Per-row mean of the segment columns.

    Columns are summed in ascending source-frame order with Kahan
    compensation, so segments sharing a column multiset (an SS draw and its
    underlying window) embed identically.
    """
    if segment.length == 0:
        raise ConfigError("cannot embed an empty segment")
    order = np.argsort(segment.permutation, kind="stable")
    cols = segment.data[:, order]
    total = np.zeros(cols.shape[0])
    comp = np.zeros(cols.shape[0])
    for j in range(cols.shape[1]):
        y = cols[:, j] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return Embedding(total / segment.length, normalized=False)


_SCORE_CHUNK = 262144


def score_pairs(embeddings, trials: TrialList, scorer: str = "cosine") -> ScoreSet:
    """Similarity score per trial; higher means more likely same speaker."""
    if scorer not in SCORERS:
        raise ConfigError(f"unknown scorer {scorer!r}")
    matrix = np.stack(
        [np.asarray(getattr(embeddings[u], "vector", embeddings[u]), dtype=np.float64)
         for u in trials.utterance_ids]
    )
    if not np.all(np.isfinite(matrix)):
        raise InvalidEmbeddingError("non-finite embedding passed to scorer")
    norms = np.linalg.norm(matrix, axis=1)
    used = np.zeros(len(matrix), dtype=bool)
    used[trials.enroll_idx] = True
    used[trials.test_idx] = True
    if scorer == "cosine" and np.any(norms[used] == 0):
        raise UndefinedScoreError("cosine score undefined for zero embeddings")

    scores = np.empty(len(trials), dtype=np.float64)
    for lo in range(0, len(trials), _SCORE_CHUNK):
        hi = min(lo + _SCORE_CHUNK, len(trials))
        a = matrix[trials.enroll_idx[lo:hi]]
        b = matrix[trials.test_idx[lo:hi]]
        if scorer == "cosine":
            na = norms[trials.enroll_idx[lo:hi]]
            nb = norms[trials.test_idx[lo:hi]]
            scores[lo:hi] = np.einsum("ij,ij->i", a, b) / (na * nb)
        else:
            diff = a - b
            scores[lo:hi] = -np.einsum("ij,ij->i", diff, diff)
    return ScoreSet(scores, scorer)


# ---------------------------------------------------------------------------
# Adapter file exchange


def write_segments_tensor(path, segments: list[Segment]) -> None:
    """Stack segments into one (n, n_bins, L) float32 tensor file."""
    if segments:
        array = np.stack([s.data for s in segments]).astype(np.float32)
    else:
        array = np.zeros((0, 0, 0), dtype=np.float32)
    write_tensor(path, array)


def write_segments_csv(path, segments: list[Segment]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_index", "utterance_id"])
        for i, seg in enumerate(segments):
            writer.writerow([i, seg.source_utterance])


def write_labels_csv(path, segments: list[Segment], speaker_of) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_index", "utterance_id", "speaker_id"])
        for i, seg in enumerate(segments):
            writer.writerow([i, seg.source_utterance, speaker_of(seg.source_utterance)])


def read_segment_order(path) -> list[str]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["segment_index", "utterance_id"]:
            raise ProtocolError(f"{path}: unexpected segments header {header}")
        return [row[1] for row in reader]


@dataclass
class ModelState:
    model_path: str
    workdir: Path
    extra: dict = field(default_factory=dict)


def _run_adapter(model: EmbeddingModelRef, workdir: Path, timeout_s: float) -> dict:
    argv = shlex.split(model.adapter_command) + ["--job", str(workdir)]
    result_path = workdir / "result.json"
    if result_path.exists():
        result_path.unlink()
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            text=True,
            timeout=timeout_s,
        )
    except subprocess.TimeoutExpired as exc:
        raise AdapterTimeout(
            f"adapter {model.name} exceeded {timeout_s}s"
        ) from exc
    except OSError as exc:
        raise AdapterFailure(f"could not launch adapter {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-10:]
        raise AdapterFailure(
            f"adapter {model.name} exited {proc.returncode}: " + " | ".join(tail)
        )
    if not result_path.is_file():
        raise ProtocolError(f"adapter {model.name} exited 0 without result.json")
    try:
        result = json.loads(result_path.read_text())
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed result.json: {exc}") from exc
    if result.get("status") != "ok":
        raise AdapterFailure(f"adapter reported status {result.get('status')!r}")
    return result


def adapter_fit(
    model: EmbeddingModelRef,
    features_path,
    labels_path,
    workdir,
    seed: int,
    params: dict | None = None,
    timeout_s: float = 600.0,
) -> ModelState:
    """Train an external model on a segment tensor; returns its state handle."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    job = {
        "command": "fit",
        "features_path": str(features_path),
        "labels_path": str(labels_path),
        "seed": int(seed),
        "params": params or {},
        "timeout_s": timeout_s,
    }
    (workdir / "job.json").write_text(json.dumps(job, indent=2) + "\n")
    result = _run_adapter(model, workdir, timeout_s)
    model_path = result.get("model_path")
    if not model_path:
        raise ProtocolError("fit result.json lacks model_path")
    extra = {k: v for k, v in result.items() if k not in ("status", "model_path")}
    return ModelState(model_path, workdir, extra)


def adapter_embed(
    model: EmbeddingModelRef,
    state: ModelState,
    features_path,
    segments_csv,
    workdir,
    timeout_s: float = 600.0,
) -> dict[str, Embedding]:
    """Embed segments through an external model; averages per utterance."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    output_path = workdir / "embeddings.bin"
    job = {
        "command": "embed",
        "model_path": str(state.model_path) if state else "",
        "features_path": str(features_path),
        "segments_path": str(segments_csv),
        "output_path": str(output_path),
    }
    (workdir / "job.json").write_text(json.dumps(job, indent=2) + "\n")
    _run_adapter(model, workdir, timeout_s)
    if not output_path.is_file():
        raise ProtocolError("adapter wrote no embeddings.bin")
    rows = read_tensor(output_path)
    order = read_segment_order(segments_csv)
    if rows.ndim != 2:
        raise ProtocolError(f"embeddings.bin must be 2-D, got ndim={rows.ndim}")
    if rows.shape[0] != len(order):
        raise ProtocolError(
            f"embeddings.bin has {rows.shape[0]} rows for {len(order)} segments"
        )
    bad = np.where(~np.isfinite(rows).all(axis=1))[0]
    if len(bad):
        raise InvalidEmbeddingError(f"non-finite embedding at row {int(bad[0])}")

    grouped: dict[str, list[np.ndarray]] = {}
    for utt, row in zip(order, rows):
        grouped.setdefault(utt, []).append(row.astype(np.float64))
    return {
        utt: Embedding(np.mean(vecs, axis=0), normalized=False)
        for utt, vecs in grouped.items()
    }
