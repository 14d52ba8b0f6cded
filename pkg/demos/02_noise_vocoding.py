"""Noise vocoding: equalize spectral detail, keep temporal envelopes.

Builds two synthetic "speakers" that share an amplitude contour but differ
in within-band spectral tilt, vocodes both with 4 log-spaced bands, and
measures what survived: the long-term spectra collapse together while the
band envelopes stay put.  Optionally writes the audio for listening.
"""

import sys

import numpy as np
import scipy.signal

from sstbench import VocoderConfig, band_envelope, noise_vocode, write_wav
from sstbench.audio import AudioClip

SR = 16000
config = VocoderConfig(noise_seed=42)
t = np.arange(2 * SR) / SR
contour = 1.0 + 0.9 * np.sin(2 * np.pi * 2.5 * t)  # shared syllabic rhythm


def make_speaker(tilt_up: bool, seed: int) -> AudioClip:
    rng = np.random.default_rng(seed)
    total = np.zeros(len(t))
    for lo, hi in config.bands():
        freqs = np.geomspace(lo * 1.1, hi * 0.9, 4)
        weights = np.linspace(1.0, 4.0, 4)
        if not tilt_up:
            weights = weights[::-1]
        band = sum(
            w * np.sin(2 * np.pi * f * t + 2 * np.pi * rng.random())
            for f, w in zip(freqs, weights)
        )
        total += band / np.sqrt(np.mean(band**2))
    total *= contour
    return AudioClip(0.2 * total / np.max(np.abs(total)), SR)


def band_db(clip, lo, hi):
    freqs, psd = scipy.signal.welch(clip.samples, SR, nperseg=2048)
    mask = (freqs >= lo) & (freqs < hi)
    return 10 * np.log10(psd[mask] + 1e-20)


speaker_a = make_speaker(True, 1)
speaker_b = make_speaker(False, 2)
vocoded_a = noise_vocode(speaker_a, config)
vocoded_b = noise_vocode(speaker_b, config)

print("band edges (Hz):", [f"{e:.0f}" for e in config.band_edges])
print()
print("long-term spectrum distance between the speakers, per band (dB):")
for lo, hi in config.bands():
    before = np.mean(np.abs(band_db(speaker_a, lo, hi) - band_db(speaker_b, lo, hi)))
    after = np.mean(np.abs(band_db(vocoded_a, lo, hi) - band_db(vocoded_b, lo, hi)))
    print(f"  {lo:7.0f}-{hi:7.0f} Hz   before={before:5.2f}   after={after:5.2f}")

measure = VocoderConfig(env_cutoff=8.0, noise_seed=0)
print()
print("envelope correlation original vs vocoded (speaker A), per band:")
for lo, hi in config.bands():
    ei = band_envelope(speaker_a, lo, hi, measure)
    eo = band_envelope(vocoded_a, lo, hi, measure)
    sl = slice(len(ei) // 10, -len(ei) // 10)
    print(f"  {lo:7.0f}-{hi:7.0f} Hz   r={np.corrcoef(ei[sl], eo[sl])[0, 1]:.3f}")

if "--write-wavs" in sys.argv:
    for name, clip in [
        ("speaker_a.wav", speaker_a),
        ("speaker_b.wav", speaker_b),
        ("vocoded_a.wav", vocoded_a),
        ("vocoded_b.wav", vocoded_b),
    ]:
        write_wav(name, clip)
        print("wrote", name)
