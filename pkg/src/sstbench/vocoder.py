"""Noise vocoder: equalize timbre across speakers, keep temporal envelopes.

A few broad frequency bands are carved out of the input; each band's energy
envelope modulates band-limited white noise, and the modulated carriers sum
to the output.  Fine spectral structure inside a band (the main carrier of
speaker timbre) is replaced by noise while the slow energy trajectories
survive.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.signal

from .audio import AudioClip, read_audio, write_wav
from .corpus import Manifest, ManifestEntry
from .errors import ConfigError
from .seeds import fnv1a64, mix


def design_bands(n_bands: int, fmin: float, fmax: float) -> list[float]:
    """Log-spaced band edges: n_bands+1 values in geometric progression."""
    if n_bands < 1:
        raise ConfigError(f"need >= 1 band, got {n_bands}")
    if not (0 < fmin < fmax):
        raise ConfigError(f"need 0 < fmin < fmax, got {fmin}, {fmax}")
    return list(np.geomspace(fmin, fmax, n_bands + 1))


@dataclass
class VocoderConfig:
    n_bands: int = 4
    band_edges: list[float] = field(default_factory=lambda: design_bands(4, 100.0, 8000.0))
    env_cutoff: float = 160.0
    filter_order: int = 4
    noise_seed: int = 0

    def __post_init__(self):
        if len(self.band_edges) != self.n_bands + 1:
            raise ConfigError(
                f"{self.n_bands} bands need {self.n_bands + 1} edges, got {len(self.band_edges)}"
            )
        edges = np.asarray(self.band_edges, dtype=float)
        if np.any(np.diff(edges) <= 0) or edges[0] <= 0:
            raise ConfigError("band edges must be positive and strictly ascending")
        min_width = float(np.min(np.diff(edges)))
        if self.env_cutoff >= min_width:
            raise ConfigError(
                f"env_cutoff {self.env_cutoff} Hz must stay below the narrowest band ({min_width} Hz)"
            )

    def bands(self) -> list[tuple[float, float]]:
        return list(zip(self.band_edges[:-1], self.band_edges[1:]))


def _bandpass_sos(lo: float, hi: float, order: int, sample_rate: int):
    nyquist = sample_rate / 2
    if not (0 < lo < hi):
        raise ConfigError(f"bad band ({lo}, {hi})")
    if hi > nyquist:
        raise ConfigError(f"band edge {hi} Hz above Nyquist ({nyquist} Hz)")
    # A top edge at Nyquist is designed fractionally below it.
    hi = min(hi, 0.99 * nyquist)
    if lo >= hi:
        raise ConfigError(f"band ({lo}, {hi}) collapses below Nyquist")
    try:
        return scipy.signal.butter(order, [lo / nyquist, hi / nyquist], btype="band", output="sos")
    except ValueError as exc:
        raise ConfigError(f"cannot design band ({lo}, {hi}) at order {order}: {exc}") from exc


def _lowpass_sos(cutoff: float, order: int, sample_rate: int):
    nyquist = sample_rate / 2
    if not (0 < cutoff < nyquist):
        raise ConfigError(f"envelope cutoff {cutoff} Hz outside (0, Nyquist)")
    return scipy.signal.butter(order, cutoff / nyquist, btype="low", output="sos")


def _zero_phase(sos, samples: np.ndarray) -> np.ndarray:
    out = scipy.signal.sosfiltfilt(sos, samples)
    if not np.all(np.isfinite(out)):
        raise ConfigError("filter produced non-finite output (band too narrow for order?)")
    return out


def band_envelope(clip: AudioClip, lo: float, hi: float, config: VocoderConfig) -> np.ndarray:
    """Energy envelope of one band: band-pass, half-wave rectify, low-pass."""
    sos_band = _bandpass_sos(lo, hi, config.filter_order, clip.sample_rate)
    banded = _zero_phase(sos_band, np.asarray(clip.samples, dtype=np.float64))
    rectified = np.maximum(banded, 0.0)
    sos_env = _lowpass_sos(config.env_cutoff, config.filter_order, clip.sample_rate)
    envelope = _zero_phase(sos_env, rectified)
    return np.maximum(envelope, 0.0)


def noise_vocode(clip: AudioClip, config: VocoderConfig) -> AudioClip:
    """Replace band fine structure with envelope-modulated noise carriers."""
    samples = np.asarray(clip.samples, dtype=np.float64)
    rng = np.random.default_rng(config.noise_seed)
    total = np.zeros_like(samples)
    for lo, hi in config.bands():
        noise = rng.standard_normal(len(samples))
        sos_band = _bandpass_sos(lo, hi, config.filter_order, clip.sample_rate)
        carrier = _zero_phase(sos_band, noise)
        total += carrier * band_envelope(clip, lo, hi, config)
    peak_in = float(np.max(np.abs(samples))) if len(samples) else 0.0
    peak_out = float(np.max(np.abs(total))) if len(total) else 0.0
    if peak_in > 0 and peak_out > 0:
        total *= peak_in / peak_out
    else:
        total[:] = 0.0
    return AudioClip(total, clip.sample_rate)


def utterance_config(config: VocoderConfig, utterance_id: str) -> VocoderConfig:
    """Per-utterance noise seed so carriers differ across a corpus run."""
    return replace(config, noise_seed=mix(config.noise_seed, fnv1a64(utterance_id)))


def vocode_corpus(manifest: Manifest, out_root, config: VocoderConfig, jobs: int | None = None) -> Manifest:
    """Vocode every manifest entry into a mirrored tree under out_root.

    Output files are RIFF WAVs regardless of the input container; a derived
    manifest CSV is written next to them.  Utterances are independent, so
    they vocode in parallel (capped by ``jobs``); per-utterance noise seeds
    keep the result identical either way.
    """
    out_root = Path(out_root)

    def vocode_one(entry: ManifestEntry) -> ManifestEntry:
        clip = read_audio(manifest.resolve(entry))
        vocoded = noise_vocode(clip, utterance_config(config, entry.utterance_id))
        rel = Path(entry.audio_path).with_suffix(".wav")
        dest = out_root / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_wav(dest, vocoded)
        return ManifestEntry(
            entry.speaker_id, entry.utterance_id, rel.as_posix(), entry.split, entry.sentence_index
        )

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        entries = list(pool.map(vocode_one, manifest.entries))
    derived = Manifest(entries, out_root)
    derived.save_csv(out_root / "manifest.csv")
    return derived
