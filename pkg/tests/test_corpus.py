import numpy as np
import pytest

from sstbench.audio import AudioClip, write_wav
from sstbench.corpus import (
    Manifest,
    ManifestEntry,
    TrialList,
    build_cluster_task,
    build_sv_trials,
    scan_corpus,
)
from sstbench.errors import (
    CorpusError,
    EmptyCorpusError,
    InfeasibleGroupingError,
    InsufficientDataError,
)
from sstbench.seeds import SeedStream


def make_tree(root, speakers_per_split=2, sentences=3):
    """Minimal TIMIT-shaped tree with tiny WAV files."""
    clip = AudioClip(np.zeros(400), 16000)
    for split in ("TRAIN", "TEST"):
        for s in range(speakers_per_split):
            spk = f"{'F' if s % 2 else 'M'}{split[:2]}{s}0"
            d = root / split / "DR1" / spk
            d.mkdir(parents=True, exist_ok=True)
            for i in range(sentences):
                write_wav(d / f"SX{i}.wav", clip)
    return root


def synthetic_manifest(n_speakers, utts_per_speaker, split="test"):
    entries = []
    for s in range(n_speakers):
        for u in range(utts_per_speaker):
            entries.append(
                ManifestEntry(f"S{s:03d}", f"S{s:03d}_U{u}", f"S{s:03d}/U{u}.wav", split, u)
            )
    return Manifest(entries)


class TestScan:
    def test_timit_tree(self, tmp_path):
        make_tree(tmp_path)
        manifest = scan_corpus(tmp_path, "timit-tree")
        assert len(manifest) == 12
        assert len(manifest.split_entries("train")) == 6
        assert len(manifest.split_entries("test")) == 6
        paths = [e.audio_path for e in manifest.entries]
        assert paths == sorted(paths)

    def test_scan_determinism_byte_identical(self, tmp_path):
        make_tree(tmp_path)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        scan_corpus(tmp_path, "timit-tree").save_csv(a)
        scan_corpus(tmp_path, "timit-tree").save_csv(b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_dir(self, tmp_path):
        with pytest.raises(EmptyCorpusError):
            scan_corpus(tmp_path, "timit-tree")

    def test_unreadable_root(self, tmp_path):
        with pytest.raises(OSError):
            scan_corpus(tmp_path / "missing", "timit-tree")

    def test_exclude_sa(self, tmp_path):
        clip = AudioClip(np.zeros(400), 16000)
        d = tmp_path / "TRAIN" / "DR1" / "MABC0"
        d.mkdir(parents=True)
        for stem in ("SA1", "SA2", "SX10"):
            write_wav(d / f"{stem}.wav", clip)
        assert len(scan_corpus(tmp_path, "timit-tree")) == 3
        assert len(scan_corpus(tmp_path, "timit-tree", exclude_sa=True)) == 1

    def test_flat_with_csv_round_trip(self, tmp_path):
        make_tree(tmp_path)
        manifest = scan_corpus(tmp_path, "timit-tree")
        manifest.save_csv(tmp_path / "manifest.csv")
        again = scan_corpus(tmp_path, "flat-with-csv")
        assert again.entries == manifest.entries

    def test_manifest_csv_header(self, tmp_path):
        manifest = synthetic_manifest(2, 1)
        path = tmp_path / "m.csv"
        manifest.save_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "speaker_id,utterance_id,audio_path,split,sentence_index"

    def test_duplicate_utterance_rejected(self):
        e = ManifestEntry("A", "A_U0", "a.wav", "test", 0)
        with pytest.raises(CorpusError):
            Manifest([e, e])


class TestTrials:
    def test_timit_sized_counts(self):
        manifest = synthetic_manifest(168, 10)
        ordered = build_sv_trials(manifest, "ordered")
        assert len(ordered) == 2_820_720
        unordered = build_sv_trials(manifest, "unordered")
        assert len(unordered) == 1_410_360

    def test_closed_form_all_n(self):
        for n in range(2, 101):
            entries = [
                ManifestEntry(f"S{i % 3}", f"U{i:03d}", f"u{i}.wav", "test", i)
                for i in range(n)
            ]
            manifest = Manifest(entries)
            assert len(build_sv_trials(manifest, "ordered")) == n * (n - 1)
            assert len(build_sv_trials(manifest, "unordered")) == n * (n - 1) // 2

    def test_same_speaker_pair(self):
        manifest = synthetic_manifest(1, 2)
        trials = build_sv_trials(manifest, "ordered")
        assert len(trials) == 2
        assert all(t.is_target for t in trials)

    def test_is_target_matches_speakers(self):
        manifest = synthetic_manifest(3, 2)
        trials = build_sv_trials(manifest, "ordered")
        for t in trials:
            same = t.enroll_utt.split("_")[0] == t.test_utt.split("_")[0]
            assert t.is_target == same
        assert trials.n_target == 3 * 2 * 1  # per speaker: 2*1 ordered pairs

    def test_no_self_pairs(self):
        manifest = synthetic_manifest(2, 3)
        trials = build_sv_trials(manifest, "ordered")
        assert all(t.enroll_utt != t.test_utt for t in trials)

    def test_insufficient(self):
        manifest = synthetic_manifest(1, 1)
        with pytest.raises(InsufficientDataError):
            build_sv_trials(manifest)

    def test_text_round_trip(self, tmp_path):
        manifest = synthetic_manifest(2, 2)
        trials = build_sv_trials(manifest, "unordered")
        path = tmp_path / "trials.txt"
        trials.save_text(path)
        first = path.read_text().splitlines()[0].split()
        assert first[0] in ("0", "1") and len(first) == 3
        back = TrialList.load_text(path, "unordered")
        assert len(back) == len(trials)
        assert list(back) == list(trials)


class TestClusterTask:
    def test_paper_sized_task(self):
        manifest = synthetic_manifest(168, 10)
        rng = SeedStream(1)
        spec = build_cluster_task(manifest, 40, (2, 8), rng)
        assert spec.composite_count == 80
        assert spec.pairwise_comparisons == 6400
        for g in spec.groups:
            assert len(g.utterance_ids_part1) == 2
            assert len(g.utterance_ids_part2) == 8
            assert not set(g.utterance_ids_part1) & set(g.utterance_ids_part2)

    def test_singleton_parts(self):
        manifest = synthetic_manifest(3, 2)
        spec = build_cluster_task(manifest, 3, (1, 1), SeedStream(0))
        for g in spec.groups:
            assert len(g.utterance_ids_part1) == len(g.utterance_ids_part2) == 1

    def test_infeasible(self):
        manifest = synthetic_manifest(2, 9)
        with pytest.raises(InfeasibleGroupingError):
            build_cluster_task(manifest, 2, (2, 8), SeedStream(0))

    def test_seed_determinism(self):
        manifest = synthetic_manifest(20, 10)
        a = build_cluster_task(manifest, 5, (2, 8), SeedStream(7))
        b = build_cluster_task(manifest, 5, (2, 8), SeedStream(7))
        assert a == b
        c = build_cluster_task(manifest, 5, (2, 8), SeedStream(8))
        # Different seed: still valid disjoint groups of the right sizes.
        for g in c.groups:
            assert len(g.utterance_ids_part1) == 2
            assert len(g.utterance_ids_part2) == 8
            assert not set(g.utterance_ids_part1) & set(g.utterance_ids_part2)
