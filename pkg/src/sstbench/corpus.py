"""Corpus manifests, verification trial lists and clustering task specs.

A manifest is one row per audio file: speaker, utterance id, path relative
to the corpus root, train/test split and the sentence's index within its
speaker.  Serialized as CSV with a fixed column order so two scans of the
same tree are byte-identical.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    CorpusError,
    EmptyCorpusError,
    InfeasibleGroupingError,
    InsufficientDataError,
)
from .seeds import SeedStream

MANIFEST_COLUMNS = ["speaker_id", "utterance_id", "audio_path", "split", "sentence_index"]
AUDIO_SUFFIXES = {".wav", ".sph", ".nist"}
LAYOUTS = ("timit-tree", "flat-with-csv")


class ManifestEntry(NamedTuple):
    speaker_id: str
    utterance_id: str
    audio_path: str  # relative to the manifest root
    split: str  # "train" | "test"
    sentence_index: int


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.utterance_id in seen:
                raise CorpusError(f"duplicate utterance_id {e.utterance_id!r}")
            seen.add(e.utterance_id)
            if e.split not in ("train", "test"):
                raise CorpusError(f"{e.utterance_id}: bad split {e.split!r}")

    def __len__(self):
        return len(self.entries)

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def utterance_ids(self, split: str | None = None) -> list[str]:
        return [e.utterance_id for e in self.entries if split is None or e.split == split]

    def speakers(self, split: str | None = None) -> list[str]:
        out = []
        for e in self.entries:
            if (split is None or e.split == split) and e.speaker_id not in out:
                out.append(e.speaker_id)
        return out

    def speaker_of(self, utterance_id: str) -> str:
        return self._by_utt()[utterance_id].speaker_id

    def entry(self, utterance_id: str) -> ManifestEntry:
        return self._by_utt()[utterance_id]

    def _by_utt(self) -> dict[str, ManifestEntry]:
        cached = getattr(self, "_utt_index", None)
        if cached is None or len(cached) != len(self.entries):
            cached = {e.utterance_id: e for e in self.entries}
            object.__setattr__(self, "_utt_index", cached)
        return cached

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.audio_path

    def rebase(self, new_root) -> "Manifest":
        """Re-express audio paths relative to a different root directory."""
        new_root = Path(new_root)
        entries = [
            e._replace(
                audio_path=Path(os.path.relpath(self.resolve(e), new_root)).as_posix()
            )
            for e in self.entries
        ]
        return Manifest(entries, new_root)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(MANIFEST_COLUMNS)
            for e in self.entries:
                writer.writerow([e.speaker_id, e.utterance_id, e.audio_path, e.split, e.sentence_index])

    @classmethod
    def load_csv(cls, path, root: Path | None = None) -> "Manifest":
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != MANIFEST_COLUMNS:
                raise CorpusError(f"{path}: unexpected manifest header {header}")
            entries = [
                ManifestEntry(row[0], row[1], row[2], row[3], int(row[4])) for row in reader
            ]
        return cls(entries, root if root is not None else path.parent)


def scan_corpus(root_path, layout: str, exclude_sa: bool = False) -> Manifest:
    """Build a manifest from a corpus directory.

    ``timit-tree`` expects root/{TRAIN,TEST}/<dialect>/<speaker>/<sentence>.wav
    (case-insensitive); ``flat-with-csv`` reads root/manifest.csv in the
    manifest CSV schema.  Entry order is lexicographic by audio path.
    """
    root = Path(root_path)
    if layout not in LAYOUTS:
        raise CorpusError(f"unknown layout {layout!r}, expected one of {LAYOUTS}")
    if not root.is_dir():
        raise OSError(f"corpus root {root} is not a readable directory")

    if layout == "flat-with-csv":
        manifest = Manifest.load_csv(root / "manifest.csv", root=root)
        entries = sorted(manifest.entries, key=lambda e: e.audio_path)
        if not entries:
            raise EmptyCorpusError(f"{root}: manifest lists no audio files")
        for e in entries:
            if not (root / e.audio_path).is_file():
                raise CorpusError(f"{root}: missing audio file {e.audio_path}")
        return Manifest(entries, root)

    records = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix.lower() not in AUDIO_SUFFIXES:
            continue
        rel = path.relative_to(root)
        parts = rel.parts
        if len(parts) < 3:
            continue
        top = parts[0].lower()
        if top not in ("train", "test"):
            continue
        stem = path.stem.upper()
        if exclude_sa and stem in ("SA1", "SA2"):
            continue
        speaker = path.parent.name.upper()
        records.append((rel.as_posix(), speaker, stem, top))
    if not records:
        raise EmptyCorpusError(f"{root}: no audio files found")

    # Sentence index = rank of the sentence among its speaker's files.
    by_speaker: dict[str, list[str]] = {}
    for _, speaker, stem, _ in records:
        by_speaker.setdefault(speaker, []).append(stem)
    sentence_rank = {
        (speaker, stem): i
        for speaker, stems in by_speaker.items()
        for i, stem in enumerate(sorted(set(stems)))
    }

    entries = []
    for rel, speaker, stem, split in sorted(records):
        entries.append(
            ManifestEntry(speaker, f"{speaker}_{stem}", rel, split, sentence_rank[(speaker, stem)])
        )
    return Manifest(entries, root)


class Trial(NamedTuple):
    enroll_utt: str
    test_utt: str
    is_target: bool


@dataclass
class TrialList:
    """All cross pairs among a set of utterances, stored as index arrays."""

    utterance_ids: list[str]
    enroll_idx: np.ndarray  # int32
    test_idx: np.ndarray  # int32
    is_target: np.ndarray  # bool
    ordering_convention: str  # "ordered" | "unordered"

    def __len__(self):
        return len(self.enroll_idx)

    def __iter__(self) -> Iterator[Trial]:
        ids = self.utterance_ids
        for e, t, y in zip(self.enroll_idx, self.test_idx, self.is_target):
            yield Trial(ids[e], ids[t], bool(y))

    @property
    def n_target(self) -> int:
        return int(self.is_target.sum())

    @property
    def n_nontarget(self) -> int:
        return len(self) - self.n_target

    def save_text(self, path) -> None:
        """One line per trial: ``is_target(0|1) enroll_utt test_utt``."""
        ids = self.utterance_ids
        with open(path, "w") as fh:
            for e, t, y in zip(self.enroll_idx, self.test_idx, self.is_target):
                fh.write(f"{int(y)} {ids[e]} {ids[t]}\n")

    @classmethod
    def load_text(cls, path, ordering_convention: str = "ordered") -> "TrialList":
        ids: list[str] = []
        index: dict[str, int] = {}
        enroll, test, target = [], [], []
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 3:
                    raise CorpusError(f"{path}: bad trial line {line!r}")
                label, a, b = parts
                for u in (a, b):
                    if u not in index:
                        index[u] = len(ids)
                        ids.append(u)
                enroll.append(index[a])
                test.append(index[b])
                target.append(label == "1")
        return cls(
            ids,
            np.asarray(enroll, dtype=np.int32),
            np.asarray(test, dtype=np.int32),
            np.asarray(target, dtype=bool),
            ordering_convention,
        )


def build_sv_trials(manifest: Manifest, convention: str = "ordered") -> TrialList:
    """Pair every test-split utterance with every other one.

    Ordered convention keeps both (a, b) and (b, a): n(n-1) trials for n
    utterances; unordered keeps one per pair: n(n-1)/2.
    """
    if convention not in ("ordered", "unordered"):
        raise CorpusError(f"unknown ordering convention {convention!r}")
    test_entries = manifest.split_entries("test")
    n = len(test_entries)
    if n < 2:
        raise InsufficientDataError(f"need >= 2 test utterances, have {n}")
    ids = [e.utterance_id for e in test_entries]
    code_of: dict[str, int] = {}
    speaker_codes = np.asarray(
        [code_of.setdefault(e.speaker_id, len(code_of)) for e in test_entries],
        dtype=np.int32,
    )
    if convention == "ordered":
        enroll = np.repeat(np.arange(n, dtype=np.int32), n)
        test = np.tile(np.arange(n, dtype=np.int32), n)
        keep = enroll != test
        enroll, test = enroll[keep], test[keep]
    else:
        enroll, test = np.triu_indices(n, k=1)
        enroll = enroll.astype(np.int32)
        test = test.astype(np.int32)
    is_target = speaker_codes[enroll] == speaker_codes[test]
    return TrialList(ids, enroll, test, is_target, convention)


@dataclass
class ClusterGroup:
    speaker_id: str
    utterance_ids_part1: list[str]
    utterance_ids_part2: list[str]


@dataclass
class ClusterTaskSpec:
    groups: list[ClusterGroup]
    n_speakers: int

    @property
    def composite_count(self) -> int:
        """Two composite utterances per speaker."""
        return 2 * self.n_speakers

    @property
    def pairwise_comparisons(self) -> int:
        """Size of the full distance matrix the clustering evaluates."""
        return self.composite_count**2


def build_cluster_task(
    manifest: Manifest,
    n_speakers: int,
    part_sizes: tuple[int, int],
    rng: SeedStream,
    split: str = "test",
) -> ClusterTaskSpec:
    """Sample speakers and split each one's sentences into two disjoint groups."""
    p1, p2 = part_sizes
    if p1 < 1 or p2 < 1:
        raise CorpusError(f"part sizes must be >= 1, got {part_sizes}")
    speakers = manifest.speakers(split)
    if n_speakers > len(speakers):
        raise InsufficientDataError(
            f"requested {n_speakers} speakers, split has {len(speakers)}"
        )
    chosen = [speakers[i] for i in rng.sample_indices(len(speakers), n_speakers)]

    by_speaker: dict[str, list[str]] = {s: [] for s in chosen}
    for e in manifest.split_entries(split):
        if e.speaker_id in by_speaker:
            by_speaker[e.speaker_id].append(e.utterance_id)

    groups = []
    for speaker in chosen:
        utts = by_speaker[speaker]
        if len(utts) < p1 + p2:
            raise InfeasibleGroupingError(
                f"speaker {speaker} has {len(utts)} sentences, needs {p1 + p2}"
            )
        order = list(range(len(utts)))
        rng.shuffle(order)
        picked = [utts[i] for i in order[: p1 + p2]]
        groups.append(ClusterGroup(speaker, picked[:p1], picked[p1 : p1 + p2]))
    return ClusterTaskSpec(groups, n_speakers)
