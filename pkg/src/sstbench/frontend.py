"""Mel log-spectrogram front end.

Framing is non-centered (first frame starts at sample 0, no padding), so
``n_frames = floor((n_samples - win) / hop) + 1`` holds exactly and shifting
the input by one hop drops exactly the first column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.signal

from .audio import AudioClip
from .errors import ConfigError, EmptyUtteranceError, ShortUtteranceError
from .tensorfile import read_tensor, write_tensor

NORMALIZATIONS = ("none", "per-utterance-meanvar")


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


@dataclass
class FrontendConfig:
    sample_rate: int = 16000
    win_length: float = 0.025  # seconds
    hop_length: float = 0.010  # seconds
    n_fft: int = 512
    n_mels: int = 40
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10
    normalization: str = "per-utterance-meanvar"
    preemphasis: float = 0.0

    def __post_init__(self):
        if self.win_samples > self.n_fft:
            raise ConfigError(
                f"window of {self.win_samples} samples exceeds n_fft={self.n_fft}"
            )
        if not (0 <= self.fmin < self.fmax <= self.sample_rate / 2):
            raise ConfigError(
                f"need 0 <= fmin < fmax <= sr/2, got fmin={self.fmin} fmax={self.fmax}"
            )
        if self.log_floor <= 0:
            raise ConfigError("log_floor must be > 0")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if self.win_length <= 0 or self.hop_length <= 0:
            raise ConfigError("win_length and hop_length must be positive")

    @property
    def win_samples(self) -> int:
        return int(round(self.win_length * self.sample_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_length * self.sample_rate))

    def to_dict(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "win_length": self.win_length,
            "hop_length": self.hop_length,
            "n_fft": self.n_fft,
            "n_mels": self.n_mels,
            "fmin": self.fmin,
            "fmax": self.fmax,
            "log_floor": self.log_floor,
            "normalization": self.normalization,
            "preemphasis": self.preemphasis,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrontendConfig":
        return cls(**d)


@dataclass
class Spectrogram:
    data: np.ndarray  # (n_bins, n_frames) log energies
    hop_length: float  # seconds
    utterance_id: str = ""

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]

    @property
    def n_bins(self) -> int:
        return self.data.shape[0]


def mel_center_frequencies(config: FrontendConfig) -> np.ndarray:
    """Center frequencies (Hz) of the mel filters, mel-equally spaced."""
    mels = np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mels + 2)
    return mel_to_hz(mels)[1:-1]


def build_mel_filterbank(config: FrontendConfig) -> np.ndarray:
    """Triangular mel filterbank, each filter peak-normalized to 1.

    Returns an (n_mels, n_fft/2+1) weight matrix.
    """
    n_bins = config.n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * config.sample_rate / config.n_fft
    mels = np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mels + 2)
    edges = mel_to_hz(mels)  # lower edge, centers..., upper edge

    center_bins = np.round(edges[1:-1] / (config.sample_rate / config.n_fft)).astype(int)
    if np.any(np.diff(center_bins) < 1):
        raise ConfigError(
            f"n_mels={config.n_mels} too large: adjacent mel centers collide on FFT bins"
        )

    weights = np.zeros((config.n_mels, n_bins))
    for m in range(config.n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_hz - lo) / (center - lo)
        falling = (hi - bin_hz) / (hi - center)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        peak = tri.max()
        if peak <= 0:
            raise ConfigError(f"mel filter {m} covers no FFT bin")
        weights[m] = tri / peak
    return weights


def _frame_signal(samples: np.ndarray, config: FrontendConfig) -> np.ndarray:
    win, hop = config.win_samples, config.hop_samples
    n = len(samples)
    if n < win:
        raise ShortUtteranceError(f"clip of {n} samples shorter than window ({win})")
    n_frames = (n - win) // hop + 1
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def _power_frames(clip: AudioClip, config: FrontendConfig) -> np.ndarray:
    if clip.sample_rate != config.sample_rate:
        raise ConfigError(
            f"clip at {clip.sample_rate} Hz, front end expects {config.sample_rate} Hz"
        )
    samples = np.asarray(clip.samples, dtype=np.float64)
    if config.preemphasis:
        samples = np.concatenate(
            [samples[:1], samples[1:] - config.preemphasis * samples[:-1]]
        )
    frames = _frame_signal(samples, config)
    window = scipy.signal.windows.hann(config.win_samples, sym=False)
    spectrum = np.fft.rfft(frames * window, n=config.n_fft, axis=1)
    return (spectrum.real**2 + spectrum.imag**2).T  # (n_bins, n_frames)


def _normalize_rows(data: np.ndarray) -> np.ndarray:
    mean = data.mean(axis=1, keepdims=True)
    centered = data - mean
    std = centered.std(axis=1, keepdims=True)
    # Constant rows become exactly zero instead of dividing by ~0.
    return np.where(std > 1e-12, centered / np.where(std > 1e-12, std, 1.0), 0.0)


def mel_spectrogram(clip: AudioClip, config: FrontendConfig) -> Spectrogram:
    """Hann window -> |FFT|^2 -> mel filterbank -> log, optional mean/var norm."""
    power = _power_frames(clip, config)
    energies = build_mel_filterbank(config) @ power
    data = np.log(np.maximum(energies, config.log_floor))
    if config.normalization == "per-utterance-meanvar":
        data = _normalize_rows(data)
    return Spectrogram(data, config.hop_length)


def stft_spectrogram(clip: AudioClip, config: FrontendConfig) -> Spectrogram:
    """Linear-frequency log power spectrogram (full FFT resolution)."""
    power = _power_frames(clip, config)
    data = np.log(np.maximum(power, config.log_floor))
    if config.normalization == "per-utterance-meanvar":
        data = _normalize_rows(data)
    return Spectrogram(data, config.hop_length)


class FeatureStore:
    """Maps utterance ids to spectrograms; dict-backed or directory-backed.

    Directory stores hold one tensor file per utterance plus a
    ``frontend.json`` sidecar recording the front-end configuration.
    """

    def __init__(self, specs: dict[str, Spectrogram] | None = None, hop_length: float = 0.010):
        self._specs: dict[str, Spectrogram] = dict(specs or {})
        self.hop_length = hop_length
        self._dir: Path | None = None

    def __contains__(self, utterance_id: str) -> bool:
        if utterance_id in self._specs:
            return True
        return self._dir is not None and (self._dir / f"{utterance_id}.sstf").is_file()

    def put(self, spec: Spectrogram) -> None:
        if not spec.utterance_id:
            raise ValueError("spectrogram needs an utterance_id to be stored")
        self._specs[spec.utterance_id] = spec

    def get(self, utterance_id: str) -> Spectrogram:
        if utterance_id in self._specs:
            return self._specs[utterance_id]
        if self._dir is not None:
            path = self._dir / f"{utterance_id}.sstf"
            if path.is_file():
                data = read_tensor(path).astype(np.float64)
                spec = Spectrogram(data, self.hop_length, utterance_id)
                self._specs[utterance_id] = spec
                return spec
        raise KeyError(utterance_id)

    def concat(self, utterance_ids: list[str], new_id: str) -> Spectrogram:
        """Composite utterance: member spectrogram columns, concatenated."""
        if not utterance_ids:
            raise EmptyUtteranceError("composite of zero utterances")
        data = np.concatenate([self.get(u).data for u in utterance_ids], axis=1)
        return Spectrogram(data, self.hop_length, new_id)

    def save_dir(self, directory, config: FrontendConfig | None = None) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {"hop_length": self.hop_length}
        if config is not None:
            meta["frontend"] = config.to_dict()
        (directory / "frontend.json").write_text(json.dumps(meta, indent=2) + "\n")
        for utt, spec in sorted(self._specs.items()):
            write_tensor(directory / f"{utt}.sstf", spec.data)

    @classmethod
    def open_dir(cls, directory) -> "FeatureStore":
        directory = Path(directory)
        meta = json.loads((directory / "frontend.json").read_text())
        store = cls(hop_length=float(meta["hop_length"]))
        store._dir = directory
        return store
