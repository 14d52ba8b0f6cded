"""Synthetic corpora with controlled frame-level vs temporal speaker cues.

Two spectrogram-level corpora bracket the behaviors a harness must expose:

* ``make_prototype_corpus``: every speaker is a fixed mel column prototype
  plus small per-frame noise.  All speaker identity lives in single frames,
  none in their order, so a frame-averaging model separates speakers easily
  and frame shuffling cannot hurt it.
* ``make_ordering_corpus``: every utterance contains the same global pool of
  frames; only the ordering is speaker-specific.  All identity lives in the
  trajectory, so any model blind to frame order scores at chance.

``make_tone_corpus`` additionally writes a small WAV corpus to disk (distinct
per-speaker spectral envelopes) for end-to-end runs through the audio path.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import AudioClip, write_wav
from .corpus import Manifest, ManifestEntry
from .frontend import FeatureStore, Spectrogram


def _split_for(index: int, per_speaker: int, train_fraction: float) -> str:
    return "train" if index < int(round(per_speaker * train_fraction)) else "test"


def _manifest_entries(n_speakers, utts_per_speaker, train_fraction):
    entries = []
    for s in range(n_speakers):
        speaker = f"SPK{s:03d}"
        for u in range(utts_per_speaker):
            utt = f"{speaker}_U{u:02d}"
            entries.append(
                ManifestEntry(
                    speaker,
                    utt,
                    f"{speaker}/U{u:02d}.wav",
                    _split_for(u, utts_per_speaker, train_fraction),
                    u,
                )
            )
    return entries


def make_prototype_corpus(
    n_speakers: int = 40,
    utts_per_speaker: int = 10,
    n_frames: int = 300,
    n_mels: int = 40,
    noise_ratio: float = 0.1,
    train_fraction: float = 0.0,
    seed: int = 1234,
    hop_length: float = 0.010,
) -> tuple[Manifest, FeatureStore]:
    """Speaker = mel prototype; per-frame noise at ``noise_ratio`` times the
    minimum prototype separation."""
    rng = np.random.default_rng(seed)
    prototypes = rng.standard_normal((n_speakers, n_mels))
    diff = prototypes[:, None, :] - prototypes[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    separation = float(dist.min())
    noise_std = noise_ratio * separation

    store = FeatureStore(hop_length=hop_length)
    entries = _manifest_entries(n_speakers, utts_per_speaker, train_fraction)
    for e in entries:
        s = int(e.speaker_id[3:])
        frames = prototypes[s][:, None] + noise_std * rng.standard_normal((n_mels, n_frames))
        store.put(Spectrogram(frames, hop_length, e.utterance_id))
    return Manifest(entries), store


def make_ordering_corpus(
    n_speakers: int = 40,
    utts_per_speaker: int = 10,
    n_frames: int = 300,
    n_mels: int = 40,
    noise_scale: float = 1e-3,
    train_fraction: float = 0.0,
    seed: int = 5678,
    hop_length: float = 0.010,
) -> tuple[Manifest, FeatureStore]:
    """Shared global frame pool; each speaker applies its own fixed ordering.

    Frame content is identical across all utterances (up to ``noise_scale``
    jitter), so only the ordering distinguishes speakers.
    """
    rng = np.random.default_rng(seed)
    pool = rng.standard_normal((n_mels, n_frames))
    orderings = []
    for s in range(n_speakers):
        order_rng = np.random.default_rng(seed + 1_000_003 * (s + 1))
        orderings.append(order_rng.permutation(n_frames))

    store = FeatureStore(hop_length=hop_length)
    entries = _manifest_entries(n_speakers, utts_per_speaker, train_fraction)
    for e in entries:
        s = int(e.speaker_id[3:])
        frames = pool[:, orderings[s]].copy()
        if noise_scale:
            frames += noise_scale * rng.standard_normal(frames.shape)
        store.put(Spectrogram(frames, hop_length, e.utterance_id))
    return Manifest(entries), store


def make_tone_corpus(
    root,
    n_speakers: int = 3,
    utts_per_speaker: int = 4,
    duration: float = 1.2,
    sample_rate: int = 16000,
    train_fraction: float = 0.5,
    seed: int = 97,
) -> Manifest:
    """Write a tiny WAV corpus: each speaker a distinct mixture of tones."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * sample_rate)) / sample_rate
    entries = _manifest_entries(n_speakers, utts_per_speaker, train_fraction)
    for e in entries:
        s = int(e.speaker_id[3:])
        freqs = 300.0 * (s + 1) + np.array([0.0, 450.0, 1100.0])
        weights = 1.0 / (1.0 + np.arange(3) + 0.3 * s)
        u = int(e.utterance_id[-2:])
        phase = 2 * np.pi * rng.random(3)
        samples = sum(
            w * np.sin(2 * np.pi * f * t + p) for w, f, p in zip(weights, freqs, phase)
        )
        samples += 0.01 * rng.standard_normal(len(t))
        samples *= 0.5 / np.max(np.abs(samples))
        # Slow per-utterance amplitude contour so utterances differ.
        samples *= 0.8 + 0.2 * np.sin(2 * np.pi * (1.0 + 0.5 * u) * t)
        dest = root / e.audio_path
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_wav(dest, AudioClip(samples, sample_rate))
    manifest = Manifest(entries, root)
    manifest.save_csv(root / "manifest.csv")
    return manifest
