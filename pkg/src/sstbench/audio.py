"""PCM16 audio decoding for RIFF WAVE and NIST SPHERE files.

Both formats are auto-detected from their magic bytes ("RIFF" vs "NIST_1A").
Only 16-bit PCM mono is accepted; samples are scaled by 1/32768 into
[-1, 1).  Writers for both containers exist so tests and the vocoder batch
mode can round-trip files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.signal

from .errors import AudioDecodeError, ConfigError, UnsupportedFormatError

SPHERE_HEADER_SIZE = 1024


@dataclass
class AudioClip:
    samples: np.ndarray  # float64 amplitudes in [-1, 1)
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_audio(path) -> AudioClip:
    """Decode a RIFF WAVE or NIST SPHERE PCM16 mono file."""
    data = Path(path).read_bytes()
    if data[:4] == b"RIFF":
        return _read_riff(path, data)
    if data[:8] == b"NIST_1A\n":
        return _read_sphere(path, data)
    raise UnsupportedFormatError(f"{path}: unrecognized magic {data[:8]!r}")


def _scale_pcm16(raw: bytes, byteorder: str) -> np.ndarray:
    samples = np.frombuffer(raw, dtype=byteorder + "i2")
    return samples.astype(np.float64) / 32768.0


def _read_riff(path, data: bytes) -> AudioClip:
    if len(data) < 12 or data[8:12] != b"WAVE":
        raise AudioDecodeError(f"{path}: RIFF file is not WAVE")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise AudioDecodeError(f"{path}: short fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise AudioDecodeError(
                    f"{path}: data chunk truncated ({len(body)} of {chunk_size} bytes)"
                )
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned
    if fmt is None or payload is None:
        raise AudioDecodeError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1 or bits != 16:
        raise UnsupportedFormatError(
            f"{path}: only PCM16 supported (format={audio_format}, bits={bits})"
        )
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: {channels} channels, expected mono")
    if len(payload) % 2:
        raise AudioDecodeError(f"{path}: odd data chunk size")
    return AudioClip(_scale_pcm16(payload, "<"), sample_rate)


def _parse_sphere_header(text: bytes) -> dict:
    fields = {}
    for line in text.split(b"\n"):
        line = line.strip()
        if not line or line.startswith(b";"):
            continue
        if line == b"end_head":
            break
        parts = line.split(None, 2)
        if len(parts) != 3:
            continue
        key, vtype, value = parts
        if vtype == b"-i":
            fields[key.decode()] = int(value)
        else:
            fields[key.decode()] = value.decode()
    return fields


def _read_sphere(path, data: bytes) -> AudioClip:
    try:
        header_size = int(data[8:16].split(b"\n")[0].strip())
    except ValueError as exc:
        raise AudioDecodeError(f"{path}: bad SPHERE size line") from exc
    if len(data) < header_size:
        raise AudioDecodeError(f"{path}: truncated SPHERE header")
    fields = _parse_sphere_header(data[16:header_size])
    coding = fields.get("sample_coding", "pcm")
    if coding != "pcm":
        raise UnsupportedFormatError(f"{path}: sample_coding {coding!r} unsupported")
    if fields.get("sample_n_bytes", 2) != 2:
        raise UnsupportedFormatError(f"{path}: only 2-byte samples supported")
    channels = fields.get("channel_count", 1)
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: {channels} channels, expected mono")
    try:
        sample_rate = fields["sample_rate"]
        sample_count = fields["sample_count"]
    except KeyError as exc:
        raise AudioDecodeError(f"{path}: SPHERE header missing {exc}") from exc
    byteorder = "<" if fields.get("sample_byte_format", "01") == "01" else ">"
    payload = data[header_size : header_size + 2 * sample_count]
    if len(payload) != 2 * sample_count:
        raise AudioDecodeError(
            f"{path}: payload holds {len(payload) // 2} samples, header says {sample_count}"
        )
    return AudioClip(_scale_pcm16(payload, byteorder), sample_rate)


def _to_pcm16(samples: np.ndarray) -> np.ndarray:
    clipped = np.clip(samples, -1.0, 32767.0 / 32768.0)
    return np.round(clipped * 32768.0).astype("<i2")


def write_wav(path, clip: AudioClip) -> None:
    """Write a mono PCM16 RIFF WAVE file."""
    pcm = _to_pcm16(clip.samples).tobytes()
    sr = clip.sample_rate
    fmt = struct.pack("<HHIIHH", 1, 1, sr, sr * 2, 2, 16)
    body = b"WAVE"
    body += b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(pcm)) + pcm
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def write_sphere(path, clip: AudioClip) -> None:
    """Write a mono PCM16 NIST SPHERE file (1024-byte ASCII header)."""
    pcm = _to_pcm16(clip.samples)
    lines = [
        "NIST_1A",
        f"{SPHERE_HEADER_SIZE:8d}".rstrip(),
        f"sample_rate -i {clip.sample_rate}",
        f"sample_count -i {len(pcm)}",
        "channel_count -i 1",
        "sample_n_bytes -i 2",
        "sample_byte_format -s2 01",
        "sample_coding -s3 pcm",
        "end_head",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii")
    if len(header) > SPHERE_HEADER_SIZE:
        raise AudioDecodeError("SPHERE header overflow")
    header += b" " * (SPHERE_HEADER_SIZE - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pcm.tobytes())


def decimate(clip: AudioClip, factor: int) -> AudioClip:
    """Integer-factor decimation (the only supported rate conversion)."""
    if factor < 1 or int(factor) != factor:
        raise ConfigError(f"decimation factor must be a positive integer, got {factor}")
    if factor == 1:
        return clip
    out = scipy.signal.decimate(clip.samples, factor, ftype="fir", zero_phase=True)
    return AudioClip(out, clip.sample_rate // factor)
