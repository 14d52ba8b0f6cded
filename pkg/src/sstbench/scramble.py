"""Fixed-length segment extraction with and without temporal structure.

Three drawing strategies: keep the window's original frame order (OS),
shuffle the frames inside the window (SS), or shuffle the whole utterance
before cutting the window (SU).  Shuffling moves spectrogram columns, never
recomputes them, so a segment column is always bit-identical to some source
column.  Every draw carries its provenance (window start, permutation,
seed path) and is reproducible from the seed-derivation scheme in
:mod:`sstbench.seeds`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .corpus import Manifest
from .errors import ConfigError, EmptyUtteranceError
from .frontend import Spectrogram
from .seeds import SeedStream, fnv1a64, mix

STRATEGIES = ("OS", "SS", "SU")


def check_strategy(kind: str) -> str:
    if kind not in STRATEGIES:
        raise ConfigError(f"unknown draw strategy {kind!r}, expected one of {STRATEGIES}")
    return kind


def segment_frames(t: float, hop: float) -> int:
    """Number of frames in a t-second segment: round(t / hop)."""
    if t <= 0 or hop <= 0:
        raise ConfigError("segment length and hop must be positive")
    return int(round(t / hop))


@dataclass
class Segment:
    data: np.ndarray  # (n_bins, L), columns copied from the source
    source_utterance: str
    strategy: str
    window_start: int
    permutation: np.ndarray  # source frame index per segment column
    seed_path: tuple[int, int, str]  # (run, epoch, utterance)

    @property
    def length(self) -> int:
        return self.data.shape[1]


def _source_indices(n_frames: int, length: int) -> np.ndarray:
    """Source index sequence; short utterances wrap-pad by cycling frames."""
    if n_frames >= length:
        return np.arange(n_frames)
    cycles = -(-length // n_frames)
    return np.tile(np.arange(n_frames), cycles)


def draw_segment(
    spec: Spectrogram,
    strategy: str,
    length: int,
    rng: SeedStream,
    seed_path: tuple[int, int, str] = (0, 0, ""),
) -> Segment:
    """Draw one fixed-length segment from a spectrogram.

    OS: uniform window start, frames in original order.  SS: same window,
    then a uniform shuffle of its columns.  SU: uniform shuffle of all the
    utterance's columns, then a uniform window into the shuffled sequence.
    """
    check_strategy(strategy)
    if spec.n_frames == 0:
        raise EmptyUtteranceError(f"{spec.utterance_id or 'utterance'} has no frames")
    if length < 1:
        raise ConfigError(f"segment length must be >= 1 frame, got {length}")
    indices = _source_indices(spec.n_frames, length)
    n_eff = len(indices)

    if strategy == "SU":
        pool = list(indices)
        rng.shuffle(pool)
        start = rng.randbelow(n_eff - length + 1)
        permutation = np.asarray(pool[start : start + length])
    else:
        start = rng.randbelow(n_eff - length + 1)
        window = list(indices[start : start + length])
        if strategy == "SS":
            rng.shuffle(window)
        permutation = np.asarray(window)

    utt = seed_path[2] or spec.utterance_id
    return Segment(
        data=spec.data[:, permutation],
        source_utterance=spec.utterance_id,
        strategy=strategy,
        window_start=int(start),
        permutation=permutation,
        seed_path=(seed_path[0], seed_path[1], utt),
    )


class PlanRecord(NamedTuple):
    run: int
    epoch: int
    utterance_id: str
    strategy: str
    length: int
    seed: int


@dataclass
class DrawPlan:
    records: list[PlanRecord]
    strategy: str
    length: int
    master_seed: int
    run: int

    def __len__(self):
        return len(self.records)

    def realize(self, record: PlanRecord, spec: Spectrogram) -> Segment:
        """Materialize one plan record against its source spectrogram."""
        return draw_segment(
            spec,
            record.strategy,
            record.length,
            SeedStream(record.seed),
            seed_path=(record.run, record.epoch, record.utterance_id),
        )

    def digest(self) -> int:
        """Order-sensitive digest of the plan for seed-independence checks."""
        h = mix(self.master_seed, self.run, fnv1a64(self.strategy), self.length)
        for rec in self.records:
            h = mix(h, rec.epoch, fnv1a64(rec.utterance_id), rec.seed)
        return h


def record_seed(master_seed: int, run: int, epoch: int, utterance_id: str) -> int:
    """Per-draw seed: mix(master_seed, run, epoch, fnv1a64(utterance_id))."""
    return mix(master_seed, run, epoch, fnv1a64(utterance_id))


def draw_plan(
    manifest_or_ids: Manifest | Iterable[str],
    epochs: int,
    strategy: str,
    length: int,
    master_seed: int,
    run: int = 0,
    split: str = "train",
) -> DrawPlan:
    """One draw record per (epoch, utterance); seeds are position-independent."""
    check_strategy(strategy)
    if isinstance(manifest_or_ids, Manifest):
        utterances = manifest_or_ids.utterance_ids(split)
    else:
        utterances = list(manifest_or_ids)
    records = [
        PlanRecord(run, epoch, utt, strategy, length, record_seed(master_seed, run, epoch, utt))
        for epoch in range(epochs)
        for utt in utterances
    ]
    return DrawPlan(records, strategy, length, master_seed, run)


def plan_to_csv(plan: DrawPlan, path, frame_counts: dict[str, int]) -> None:
    """Audit dump: run,epoch,utterance_id,strategy,window_start,permutation.

    Materializes each record's window and permutation against the given
    per-utterance frame counts (no spectrogram data needed).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "epoch", "utterance_id", "strategy", "window_start", "permutation"])
        for rec in plan.records:
            n_frames = frame_counts[rec.utterance_id]
            fake = Spectrogram(np.zeros((1, n_frames)), 0.0, rec.utterance_id)
            seg = plan.realize(rec, fake)
            writer.writerow(
                [
                    rec.run,
                    rec.epoch,
                    rec.utterance_id,
                    rec.strategy,
                    seg.window_start,
                    "-".join(str(i) for i in seg.permutation),
                ]
            )
